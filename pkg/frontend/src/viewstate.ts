// Client-side state: frame ordering, connection status, scheme edits.

import { DEFAULT_SCHEME, FrameMsg, SchemeBody, decodeBase64 } from "./protocol.js";

export type Status = "connecting" | "live" | "disconnected";

export interface FramePayload {
    seq: number;
    w: number;
    h: number;
    pixels: Uint8Array;
}

/** Drops stale or duplicate frames so the displayed seq never decreases. */
export class FrameGate {
    lastSeq = 0;

    accept(msg: FrameMsg): FramePayload | null {
        if (msg.seq <= this.lastSeq) return null;
        this.lastSeq = msg.seq;
        return { seq: msg.seq, w: msg.w, h: msg.h, pixels: decodeBase64(msg.pix) };
    }
}

export type PutScheme = (body: SchemeBody) => Promise<{ ok: boolean; body?: SchemeBody }>;

export interface TimerHost {
    set(fn: () => void, ms: number): unknown;
    clear(handle: unknown): void;
}

const REAL_TIMERS: TimerHost = {
    set: (fn, ms) => setTimeout(fn, ms),
    clear: (handle) => clearTimeout(handle as Parameters<typeof clearTimeout>[0]),
};

/**
 * Owns the scheme controls: edits coalesce into exactly one PUT per
 * debounce window (150 ms), controls stay "pending" until the server
 * acknowledges, and a rejected config restores the last confirmed one.
 */
export class SchemeController {
    confirmed: SchemeBody = { ...DEFAULT_SCHEME };
    pending = false;
    notice: string | null = null;
    onchange: (() => void) | null = null;

    private draft: SchemeBody | null = null;
    private timer: unknown = null;

    constructor(
        private putScheme: PutScheme,
        private debounceMs = 150,
        private timers: TimerHost = REAL_TIMERS,
    ) {}

    /** The state the controls should render right now. */
    view(): SchemeBody {
        return this.draft ?? this.confirmed;
    }

    update(patch: Partial<SchemeBody>): void {
        this.draft = { ...this.view(), ...patch };
        this.pending = true;
        this.notice = null;
        if (this.timer !== null) this.timers.clear(this.timer);
        this.timer = this.timers.set(() => void this.flush(), this.debounceMs);
        this.onchange?.();
    }

    /** Server state observed out of band (GET /api/scheme) confirms us. */
    observe(body: SchemeBody): void {
        if (this.draft === null) {
            this.confirmed = body;
            this.pending = false;
            this.onchange?.();
        }
    }

    private async flush(): Promise<void> {
        this.timer = null;
        const body = this.draft;
        if (body === null) return;
        this.draft = null;
        try {
            const res = await this.putScheme(body);
            if (res.ok) {
                this.confirmed = res.body ?? body;
            } else {
                this.notice = "server rejected the scheme; controls restored";
            }
        } catch {
            this.notice = "scheme update failed; controls restored";
        }
        if (this.draft === null) this.pending = false;
        this.onchange?.();
    }
}
