/* tslint:disable */
/* eslint-disable */

/**
 * ε-norm of a seeded random perturbation against `ε ∈ [0, 1/2)`, for
 * `H = diag(1 + k^power)`.
 */
export function epsNormCurve(dim: number, power: number, seed: number, points: number): string;

/**
 * Closed-form Kubo n-point value against the simplex Monte-Carlo estimate.
 */
export function kuboVsMonteCarlo(dim: number, n: number, beta: number, seed: number, samples: number): string;

/**
 * Free-energy Taylor errors along a seeded centered direction.
 */
export function taylorConvergence(dim: number, beta: number, epsilon: number, seed: number, order: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly epsNormCurve: (a: number, b: number, c: number, d: number) => [number, number];
    readonly kuboVsMonteCarlo: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly taylorConvergence: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
