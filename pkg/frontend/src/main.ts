// Page entry: wire the canvas, controls and server connections together.
//
// URL parameters:
//   ?server=host:port   frame server (default: the page's own host)
//   ?display=1          display-only mode: hide the control strip

import { connectFrames, SocketLike } from "./client.js";
import { Display } from "./display.js";
import { binIndexFor, contourUnderlay } from "./pixels.js";
import { DEFAULT_SCHEME, HeightmapResp, Mode, SchemeBody } from "./protocol.js";
import { FrameGate, SchemeController, Status } from "./viewstate.js";

const CELL_PX = 10;

function el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node as T;
}

async function boot(): Promise<void> {
    const params = new URLSearchParams(location.search);
    const server = params.get("server") ?? location.host;
    const base = `http://${server}`;
    const displayOnly = params.get("display") === "1";
    if (displayOnly) el<HTMLDivElement>("controls").style.display = "none";

    const hm: HeightmapResp = await (await fetch(`${base}/api/heightmap`)).json();
    const width = hm.ncols * CELL_PX;
    const height = hm.nrows * CELL_PX;

    const under = el<HTMLCanvasElement>("underlay");
    const main = el<HTMLCanvasElement>("frame");
    for (const canvas of [under, main]) {
        canvas.width = width;
        canvas.height = height;
    }
    const underCtx = under.getContext("2d")!;
    underCtx.putImageData(
        new ImageData(contourUnderlay(hm.heights, hm.nrows, hm.ncols, CELL_PX, CELL_PX), width, height),
        0,
        0,
    );
    main.style.opacity = "0.85"; // let the contours show through

    const display = new Display(main.getContext("2d")!, CELL_PX, CELL_PX);
    const gate = new FrameGate();
    const statusEl = el<HTMLSpanElement>("status");
    const seqEl = el<HTMLSpanElement>("seq");

    const controller = new SchemeController(async (body: SchemeBody) => {
        const res = await fetch(`${base}/api/scheme`, {
            method: "PUT",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(body),
        });
        return res.ok ? { ok: true, body: (await res.json()) as SchemeBody } : { ok: false };
    });

    const modeSel = el<HTMLSelectElement>("mode");
    const keywordIn = el<HTMLInputElement>("keyword");
    const alphaIn = el<HTMLInputElement>("alpha");
    const t0In = el<HTMLInputElement>("t0");
    const t1In = el<HTMLInputElement>("t1");
    const binsIn = el<HTMLInputElement>("bins");
    const scrubIn = el<HTMLInputElement>("scrub");
    const binEl = el<HTMLSpanElement>("bin");
    const noticeEl = el<HTMLSpanElement>("notice");

    const renderControls = () => {
        const s = controller.view();
        modeSel.value = s.mode;
        keywordIn.value = s.keyword;
        alphaIn.value = String(s.alpha);
        t0In.value = s.t0 === null ? "" : String(s.t0);
        t1In.value = s.t1 === null ? "" : String(s.t1);
        binsIn.value = String(s.bins);
        noticeEl.textContent = controller.notice ?? (controller.pending ? "pending…" : "");
        if (s.t0 !== null && s.t1 !== null) {
            scrubIn.min = String(s.t0);
            scrubIn.max = String(s.t1);
            binEl.textContent = `bin ${binIndexFor(Number(scrubIn.value), s.t0, s.t1, s.bins)}`;
        } else {
            binEl.textContent = "";
        }
    };
    controller.onchange = renderControls;

    modeSel.onchange = () => controller.update({ mode: modeSel.value as Mode });
    keywordIn.oninput = () => controller.update({ keyword: keywordIn.value });
    alphaIn.oninput = () => controller.update({ alpha: Number(alphaIn.value) });
    binsIn.oninput = () => controller.update({ bins: Math.max(1, Number(binsIn.value) || 1) });
    const windowChanged = () => {
        const t0 = t0In.value === "" ? null : Number(t0In.value);
        const t1 = t1In.value === "" ? null : Number(t1In.value);
        controller.update({ t0, t1 });
    };
    t0In.onchange = windowChanged;
    t1In.onchange = windowChanged;
    scrubIn.oninput = () => {
        const s = controller.view();
        if (s.t0 !== null && s.t1 !== null) {
            binEl.textContent = `bin ${binIndexFor(Number(scrubIn.value), s.t0, s.t1, s.bins)}`;
        }
    };

    try {
        const current = (await (await fetch(`${base}/api/scheme`)).json()) as SchemeBody;
        controller.observe(current);
    } catch {
        controller.observe({ ...DEFAULT_SCHEME });
    }
    renderControls();

    const wsUrl = `ws://${server}/api/frames`;
    connectFrames(wsUrl, {
        makeSocket: (url) => new WebSocket(url) as unknown as SocketLike,
        onFrame: (msg) => {
            const frame = gate.accept(msg);
            if (frame) {
                display.paint(frame);
                seqEl.textContent = `frame ${frame.seq}`;
            }
        },
        onStatus: (status: Status) => {
            statusEl.textContent = status;
            statusEl.className = status;
        },
    });
}

void boot();
