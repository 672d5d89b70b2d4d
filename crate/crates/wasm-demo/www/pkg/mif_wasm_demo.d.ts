/* tslint:disable */
/* eslint-disable */

/**
 * Tumor-growth filter advanced one observation at a time.
 */
export class TumorDemo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Assimilates the next observation. Returns `false` once all are used.
     */
    advance(): boolean;
    mean(): Float64Array;
    constructor(seed: bigint, points: number, samples: number);
    /**
     * Row-major node coordinates.
     */
    nodes(): Float64Array;
    resampled(): boolean;
    step(): number;
    steps(): number;
    truth(): Float64Array;
    /**
     * Normalized node weights.
     */
    weights(): Float64Array;
}

/**
 * Runs the implicit filter, a particle filter and an EKF on one bearings-only
 * realization. Returns per-step position errors laid out as
 * `[implicit_1..K, pf_1..K, ekf_1..K]`.
 */
export function bearing_compare(seed: bigint, points: number, samples: number, particles: number): Float64Array;

/**
 * Evaluates a 2-D Shepard interpolant on a `res` x `res` grid over `[lo, hi]^2`.
 *
 * `nodes` is row-major `(x, y)` pairs. The result is row-major with `y`
 * varying slowest.
 */
export function shepard_grid(nodes: Float64Array, values: Float64Array, neighbors: number, exponent: number, inverse: boolean, res: number, lo: number, hi: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_tumordemo_free: (a: number, b: number) => void;
    readonly bearing_compare: (a: bigint, b: number, c: number, d: number) => [number, number, number, number];
    readonly shepard_grid: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number, number];
    readonly tumordemo_advance: (a: number) => [number, number, number];
    readonly tumordemo_mean: (a: number) => [number, number];
    readonly tumordemo_new: (a: bigint, b: number, c: number) => [number, number, number];
    readonly tumordemo_nodes: (a: number) => [number, number];
    readonly tumordemo_resampled: (a: number) => number;
    readonly tumordemo_step: (a: number) => number;
    readonly tumordemo_steps: (a: number) => number;
    readonly tumordemo_truth: (a: number) => [number, number];
    readonly tumordemo_weights: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
