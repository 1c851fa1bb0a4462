// Painting frames onto a canvas-like surface.

import { upscaleNearest } from "./pixels.js";
import { FramePayload } from "./viewstate.js";

export interface ImageLike {
    data: Uint8ClampedArray;
    width: number;
    height: number;
}

export interface ContextLike {
    putImageData(img: ImageLike, dx: number, dy: number): void;
}

export type ImageFactory = (data: Uint8ClampedArray<ArrayBuffer>, w: number, h: number) => ImageLike;

const plainImage: ImageFactory = (data, width, height) => ({ data, width, height });

/**
 * Upscales each accepted frame into the canvas; what is painted is exactly
 * the server frame, nearest-neighbor enlarged with north up.
 */
export class Display {
    constructor(
        private ctx: ContextLike,
        private scaleX: number,
        private scaleY: number,
        private makeImage: ImageFactory = typeof ImageData === "undefined"
            ? plainImage
            : (data, w, h) => new ImageData(data, w, h),
    ) {}

    paint(frame: FramePayload): ImageLike {
        const rgba = upscaleNearest(frame.pixels, frame.w, frame.h, this.scaleX, this.scaleY);
        const img = this.makeImage(rgba, frame.w * this.scaleX, frame.h * this.scaleY);
        this.ctx.putImageData(img, 0, 0);
        return img;
    }
}
