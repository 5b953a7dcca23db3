/** Parses the engine's JSON model bundle ("fw-model-bundle" v1): PCA,
 * emotion network weights, one-class SVM solution, focus-window config,
 * optional gaze map. The bundle is the single source of truth shared with
 * the engine. */

export interface KernelSpec {
  kind: "rbf" | "linear";
  gamma: number | null;
}

export interface OcsvmModel {
  supportVectors: number[][];
  alphas: number[];
  rho: number;
  kernel: KernelSpec;
  nu: number;
  scoreScale: number;
  trainingCount: number;
}

export interface PcaModel {
  mean: number[];
  components: number[][]; // (k, d)
}

export interface MlpModel {
  w1: number[][]; // (hidden, dIn)
  b1: number[];
  w2: number[][]; // (11, hidden)
  b2: number[];
}

export interface FocusConfig {
  windowSeconds: number;
  minFrames: number;
  nu: number;
  kernel: KernelSpec;
  nComponents: number;
  smoothing: number;
}

export interface GazeMapData {
  a: number[][]; // 2x2
  b: number[]; // 2
  rmsResidual: number;
  samplesUsed: number;
}

export interface ModelBundle {
  landmarkCount: number;
  courseVocabulary: string[];
  ocsvm: OcsvmModel;
  pca: PcaModel;
  mlp: MlpModel;
  config: FocusConfig;
  gazeMap: GazeMapData | null;
}

export const BUNDLE_FORMAT = "fw-model-bundle";
export const BUNDLE_VERSION = 1;

export function parseBundle(d: any): ModelBundle {
  if (d?.format !== BUNDLE_FORMAT) throw new Error("not a model bundle");
  if (d.version !== BUNDLE_VERSION) throw new Error(`unsupported bundle version ${d.version}`);
  return {
    landmarkCount: d.landmark_count,
    courseVocabulary: [...d.course_vocabulary],
    ocsvm: {
      supportVectors: d.ocsvm.support_vectors,
      alphas: d.ocsvm.alphas,
      rho: d.ocsvm.rho,
      kernel: { kind: d.ocsvm.kernel.kind, gamma: d.ocsvm.kernel.gamma },
      nu: d.ocsvm.nu,
      scoreScale: d.ocsvm.score_scale,
      trainingCount: d.ocsvm.training_count,
    },
    pca: { mean: d.pca.mean, components: d.pca.components },
    mlp: { w1: d.mlp.w1, b1: d.mlp.b1, w2: d.mlp.w2, b2: d.mlp.b2 },
    config: {
      windowSeconds: d.focus_config.window_seconds,
      minFrames: d.focus_config.min_frames,
      nu: d.focus_config.nu,
      kernel: { kind: d.focus_config.kernel.kind, gamma: d.focus_config.kernel.gamma },
      nComponents: d.focus_config.n_components,
      smoothing: d.focus_config.smoothing,
    },
    gazeMap:
      d.gaze_map == null
        ? null
        : {
            a: d.gaze_map.a,
            b: d.gaze_map.b,
            rmsResidual: d.gaze_map.rms_residual,
            samplesUsed: d.gaze_map.samples_used,
          },
  };
}
