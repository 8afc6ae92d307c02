/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const epsNormCurve: (a: number, b: number, c: number, d: number) => [number, number];
export const kuboVsMonteCarlo: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const taylorConvergence: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
