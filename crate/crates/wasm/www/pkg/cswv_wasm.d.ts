/* tslint:disable */
/* eslint-disable */

export class Clip {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    frame(index: number): Uint8Array;
    readonly frameCount: number;
    readonly frameRate: number;
    readonly height: number;
    readonly psnrFullSize: number;
    readonly psnrReduced: number;
    readonly streamBytes: number;
    readonly width: number;
}

export class Session {
    free(): void;
    [Symbol.dispose](): void;
    compressionRatio(): number;
    /**
     * Decodes layers `0..=layer` (0 = BL).
     */
    decode(layer: number, algorithm: string): Clip;
    measurementPercentage(): number;
    constructor(width: number, height: number, seed: bigint, threshold: number, bits: number);
    sourceFrame(index: number): Uint8Array;
    streamLen(): number;
}

/**
 * `[conventional mult, conventional add, proposed mult, proposed add, ratio]`.
 */
export function complexity(n: number, m_fraction: number, itr: number): Float64Array;

/**
 * NMSE per iteration of one recovery algorithm.
 */
export function learningCurve(n: number, k: number, iterations: number, seed: bigint, algorithm: string): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_clip_free: (a: number, b: number) => void;
    readonly __wbg_session_free: (a: number, b: number) => void;
    readonly clip_frame: (a: number, b: number) => [number, number];
    readonly clip_frameCount: (a: number) => number;
    readonly clip_frameRate: (a: number) => number;
    readonly clip_height: (a: number) => number;
    readonly clip_psnrFullSize: (a: number) => number;
    readonly clip_psnrReduced: (a: number) => number;
    readonly clip_streamBytes: (a: number) => number;
    readonly clip_width: (a: number) => number;
    readonly complexity: (a: number, b: number, c: number) => [number, number, number, number];
    readonly learningCurve: (a: number, b: number, c: number, d: bigint, e: number, f: number) => [number, number, number, number];
    readonly session_compressionRatio: (a: number) => [number, number, number];
    readonly session_decode: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly session_measurementPercentage: (a: number) => [number, number, number];
    readonly session_new: (a: number, b: number, c: bigint, d: number, e: number) => [number, number, number];
    readonly session_sourceFrame: (a: number, b: number) => [number, number];
    readonly session_streamLen: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
