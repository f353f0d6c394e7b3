/* tslint:disable */
/* eslint-disable */

/**
 * RGBA pixels of the Gaussian map, ready for `ImageData`.
 */
export function gaussianMap(boxes: string, width: number, height: number, kx: number, ky: number): Uint8Array;

/**
 * JSON `{raw, refined, occluders}` for boxes given as `[[l, t, r, b], ...]`.
 */
export function occlusionField(boxes: string, width: number, height: number, thre: number, kx: number, ky: number): string;

export function presetNames(): string[];

/**
 * Tracks a canonical scenario; see [`demo::run_preset`] for the JSON shape.
 */
export function runPreset(name: string, oao: boolean, bam: boolean, gm: boolean): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly gaussianMap: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly occlusionField: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly presetNames: () => [number, number];
    readonly runPreset: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_drop_slice: (a: number, b: number) => void;
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
