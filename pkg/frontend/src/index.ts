export * from "./types";
export * from "./bundle";
export * from "./geometry";
export * from "./stream";
export * from "./scoring";
export * from "./calibration";
export * from "./client";
export * from "./views";
