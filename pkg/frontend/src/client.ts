// WebSocket subscription with automatic reconnect.

import { FrameMsg } from "./protocol.js";
import { Status, TimerHost } from "./viewstate.js";

export interface SocketLike {
    onopen: ((ev?: unknown) => void) | null;
    onmessage: ((ev: { data: string }) => void) | null;
    onclose: ((ev?: unknown) => void) | null;
    close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface FrameClientOpts {
    makeSocket: SocketFactory;
    onFrame: (msg: FrameMsg) => void;
    onStatus: (status: Status) => void;
    retryMs?: number;
    timers?: TimerHost;
}

const REAL_TIMERS: TimerHost = {
    set: (fn, ms) => setTimeout(fn, ms),
    clear: (handle) => clearTimeout(handle as Parameters<typeof clearTimeout>[0]),
};

/** Keeps one live socket on the frame stream, reconnecting after drops. */
export function connectFrames(url: string, opts: FrameClientOpts): { stop(): void } {
    const retryMs = opts.retryMs ?? 1000;
    const timers = opts.timers ?? REAL_TIMERS;
    let stopped = false;
    let socket: SocketLike | null = null;
    let retry: unknown = null;

    const open = () => {
        if (stopped) return;
        opts.onStatus("connecting");
        socket = opts.makeSocket(url);
        socket.onopen = () => opts.onStatus("live");
        socket.onmessage = (ev) => opts.onFrame(JSON.parse(ev.data) as FrameMsg);
        socket.onclose = () => {
            socket = null;
            if (stopped) return;
            opts.onStatus("disconnected");
            retry = timers.set(open, retryMs);
        };
    };
    open();

    return {
        stop() {
            stopped = true;
            if (retry !== null) timers.clear(retry);
            socket?.close();
        },
    };
}
