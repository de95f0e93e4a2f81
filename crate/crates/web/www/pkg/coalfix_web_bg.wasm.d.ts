/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const format_formula: (a: number, b: number) => [number, number];
export const program_normal_form: (a: number, b: number) => [number, number];
export const sigma_curves: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const state_sets: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
