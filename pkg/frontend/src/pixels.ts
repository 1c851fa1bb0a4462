// Pure pixel transforms between server frames and canvas buffers.

/**
 * Nearest-neighbor upscale of a row-major RGB8 frame into an RGBA buffer.
 * Each source cell becomes an sx by sy block. Frames arrive with row 0 at
 * the grid's southern edge; flipY (the default) puts north at the top of
 * the screen.
 */
export function upscaleNearest(
    pix: Uint8Array,
    w: number,
    h: number,
    sx: number,
    sy: number,
    flipY = true,
): Uint8ClampedArray<ArrayBuffer> {
    if (pix.length !== w * h * 3) {
        throw new Error(`frame is ${pix.length} bytes, expected ${w * h * 3}`);
    }
    const outW = w * sx;
    const outH = h * sy;
    const out = new Uint8ClampedArray(outW * outH * 4);
    for (let y = 0; y < outH; y++) {
        const screenRow = Math.floor(y / sy);
        const srcRow = flipY ? h - 1 - screenRow : screenRow;
        for (let x = 0; x < outW; x++) {
            const srcCol = Math.floor(x / sx);
            const s = (srcRow * w + srcCol) * 3;
            const d = (y * outW + x) * 4;
            out[d] = pix[s];
            out[d + 1] = pix[s + 1];
            out[d + 2] = pix[s + 2];
            out[d + 3] = 255;
        }
    }
    return out;
}

/**
 * Faint grayscale contour bands from the heightmap, for the underlay
 * canvas beneath the live frame. Same orientation rules as frames.
 */
export function contourUnderlay(
    heights: number[],
    nrows: number,
    ncols: number,
    sx: number,
    sy: number,
    levels = 6,
    flipY = true,
): Uint8ClampedArray<ArrayBuffer> {
    let peak = 0;
    for (const v of heights) if (v > peak) peak = v;
    const outW = ncols * sx;
    const outH = nrows * sy;
    const out = new Uint8ClampedArray(outW * outH * 4);
    for (let y = 0; y < outH; y++) {
        const screenRow = Math.floor(y / sy);
        const srcRow = flipY ? nrows - 1 - screenRow : screenRow;
        for (let x = 0; x < outW; x++) {
            const srcCol = Math.floor(x / sx);
            const v = peak > 0 ? heights[srcRow * ncols + srcCol] / peak : 0;
            const band = Math.min(levels - 1, Math.floor(v * levels));
            const shade = 40 + Math.round((band / (levels - 1)) * 120);
            const d = (y * outW + x) * 4;
            out[d] = shade;
            out[d + 1] = shade;
            out[d + 2] = shade;
            out[d + 3] = 255;
        }
    }
    return out;
}

/** Which animation bin a scrubber position falls into (matches the server). */
export function binIndexFor(pos: number, t0: number, t1: number, bins: number): number {
    if (t1 <= t0 || bins < 1) return 0;
    if (pos <= t0) return 0;
    if (pos >= t1) return bins - 1;
    return Math.min(bins - 1, Math.floor(((pos - t0) / (t1 - t0)) * bins));
}
