// Wire types for the frame server's HTTP/WS contract.

export type Mode = "height" | "density" | "keyword" | "topics" | "animate";

export interface ColormapBody {
    low: [number, number, number];
    high: [number, number, number];
}

export interface SchemeBody {
    mode: Mode;
    keyword: string;
    t0: number | null;
    t1: number | null;
    bins: number;
    alpha: number;
    colormap: ColormapBody;
    log_scale: boolean;
}

export const DEFAULT_SCHEME: SchemeBody = {
    mode: "height",
    keyword: "",
    t0: null,
    t1: null,
    bins: 10,
    alpha: 0.5,
    colormap: { low: [0, 0, 64], high: [255, 255, 0] },
    log_scale: false,
};

export interface FrameMsg {
    seq: number;
    w: number;
    h: number;
    pix: string; // base64 row-major RGB8, row 0 = southern edge
}

export interface HeightmapResp {
    nrows: number;
    ncols: number;
    bbox: { lat_min: number; lat_max: number; lon_min: number; lon_max: number };
    heights: number[]; // row-major, row 0 = southern edge
}

export function decodeBase64(b64: string): Uint8Array {
    if (typeof atob === "function") {
        const s = atob(b64);
        const out = new Uint8Array(s.length);
        for (let i = 0; i < s.length; i++) out[i] = s.charCodeAt(i);
        return out;
    }
    // node (tests)
    return new Uint8Array(Buffer.from(b64, "base64"));
}
