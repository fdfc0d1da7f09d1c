/* tslint:disable */
/* eslint-disable */

/**
 * `[hv, l2, w2, iterations, converged]` for a wavelet against its shifted copy.
 */
export function compare_shift(shift: number, kappa: number, lambda: number, epsilon: number, n_x: number): Float64Array;

/**
 * Real part of the field of a point source at the left edge of a
 * phantom, row-major over the `n × n` grid and scaled to `[-1, 1]`.
 */
export function phantom_wavefield(n: number, freq_hz: number, contrast: number): Float64Array;

/**
 * Shifts followed by the normalized L2 and HV curves, `points` values each.
 */
export function shift_scan(points: number, kappa: number, lambda: number, epsilon: number, n_x: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly compare_shift: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly phantom_wavefield: (a: number, b: number, c: number) => [number, number, number, number];
    readonly shift_scan: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
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
