/* tslint:disable */
/* eslint-disable */

/**
 * Fit `n` free points to the pivots of a synthetic shape.
 */
export function fit_demo(kind: string, seed: number, n: number, steps: number): string;

/**
 * Pivot matching of a predicted sequence against a ground-truth pivot
 * sequence, both given as JSON arrays of `[x, y]`.
 */
export function match_demo(pred_json: string, gt_json: string): string;

/**
 * Shape kinds accepted by the other entry points, as a JSON array.
 */
export function shape_kinds(): string;

/**
 * A synthetic shape with its threshold-simplified pivots and the `k`-point
 * pivot and even-spacing representations.
 */
export function simplify_demo(kind: string, seed: number, area_threshold: number, k: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly fit_demo: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly match_demo: (a: number, b: number, c: number, d: number) => [number, number];
    readonly shape_kinds: () => [number, number];
    readonly simplify_demo: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
