/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_prediction_free: (a: number, b: number) => void;
export const predict: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const prediction_agarwal: (a: number) => number;
export const prediction_det_m: (a: number) => number;
export const prediction_joint: (a: number) => [number, number];
export const prediction_mean_idler: (a: number) => number;
export const prediction_mean_signal: (a: number) => number;
export const prediction_min_eigenvalue: (a: number) => number;
export const prediction_n_max: (a: number) => number;
export const prediction_signal_marginal: (a: number) => [number, number];
export const prediction_signal_r2: (a: number) => [number, number];
export const witness_curves: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
