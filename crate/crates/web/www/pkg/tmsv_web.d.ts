/* tslint:disable */
/* eslint-disable */

/**
 * Detected joint distribution and its witnesses at one parameter point.
 */
export class Prediction {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Signal marginal over `0..=n_max`.
     */
    signal_marginal(): Float64Array;
    /**
     * `[thermal_r2, poisson_r2]` for the signal marginal, `NaN` if degenerate.
     */
    signal_r2(): Float64Array;
    /**
     * `NaN` when the distribution has no coincidences.
     */
    readonly agarwal: number;
    readonly det_m: number;
    /**
     * Row-major `(n_max + 1)^2` grid, signal count along rows.
     */
    readonly joint: Float64Array;
    readonly mean_idler: number;
    readonly mean_signal: number;
    readonly min_eigenvalue: number;
    readonly n_max: number;
}

/**
 * Witnesses are evaluated on the automatic grid; `n_max` only limits the
 * returned picture.
 */
export function predict(z: number, l1: number, l2: number, eta: number, nu: number, n_max: number): Prediction;

/**
 * `points` samples of `z` in `[z_lo, z_hi]`, flattened as
 * `[z, agarwal, det_m, min_eigenvalue]` per sample.
 */
export function witness_curves(l1: number, l2: number, eta: number, nu: number, z_lo: number, z_hi: number, points: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_prediction_free: (a: number, b: number) => void;
    readonly predict: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly prediction_agarwal: (a: number) => number;
    readonly prediction_det_m: (a: number) => number;
    readonly prediction_joint: (a: number) => [number, number];
    readonly prediction_mean_idler: (a: number) => number;
    readonly prediction_mean_signal: (a: number) => number;
    readonly prediction_min_eigenvalue: (a: number) => number;
    readonly prediction_n_max: (a: number) => number;
    readonly prediction_signal_marginal: (a: number) => [number, number];
    readonly prediction_signal_r2: (a: number) => [number, number];
    readonly witness_curves: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
