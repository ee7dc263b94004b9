/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_clip_free: (a: number, b: number) => void;
export const __wbg_session_free: (a: number, b: number) => void;
export const clip_frame: (a: number, b: number) => [number, number];
export const clip_frameCount: (a: number) => number;
export const clip_frameRate: (a: number) => number;
export const clip_height: (a: number) => number;
export const clip_psnrFullSize: (a: number) => number;
export const clip_psnrReduced: (a: number) => number;
export const clip_streamBytes: (a: number) => number;
export const clip_width: (a: number) => number;
export const complexity: (a: number, b: number, c: number) => [number, number, number, number];
export const learningCurve: (a: number, b: number, c: number, d: bigint, e: number, f: number) => [number, number, number, number];
export const session_compressionRatio: (a: number) => [number, number, number];
export const session_decode: (a: number, b: number, c: number, d: number) => [number, number, number];
export const session_measurementPercentage: (a: number) => [number, number, number];
export const session_new: (a: number, b: number, c: bigint, d: number, e: number) => [number, number, number];
export const session_sourceFrame: (a: number, b: number) => [number, number];
export const session_streamLen: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
