/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_tumordemo_free: (a: number, b: number) => void;
export const bearing_compare: (a: bigint, b: number, c: number, d: number) => [number, number, number, number];
export const shepard_grid: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number, number];
export const tumordemo_advance: (a: number) => [number, number, number];
export const tumordemo_mean: (a: number) => [number, number];
export const tumordemo_new: (a: bigint, b: number, c: number) => [number, number, number];
export const tumordemo_nodes: (a: number) => [number, number];
export const tumordemo_resampled: (a: number) => number;
export const tumordemo_step: (a: number) => number;
export const tumordemo_steps: (a: number) => number;
export const tumordemo_truth: (a: number) => [number, number];
export const tumordemo_weights: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
