import init, { bandImportance, sampleCurve, classificationMap } from "./pkg/hstc_web.js";

const $ = (id) => document.getElementById(id);
const PALETTE = ["#f2f2f2", "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"];

// Let the status line paint before the (blocking) wasm call.
function busy(statusId, text, work) {
  const el = $(statusId);
  el.className = "status";
  el.textContent = text;
  setTimeout(() => {
    const t0 = performance.now();
    try {
      const msg = work();
      el.textContent = `${msg} (${((performance.now() - t0) / 1000).toFixed(1)} s)`;
    } catch (e) {
      el.className = "status err";
      el.textContent = String(e);
    }
  }, 20);
}

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
  ctx.fillStyle = "#333";
  ctx.font = "12px system-ui";
}

function drawBands(r) {
  const c = $("b-canvas"), ctx = c.getContext("2d");
  const pad = 40, w = c.width, h = c.height;
  axes(ctx, w, h, pad);
  const max = Math.max(...r.scores, 1e-12);
  const bw = (w - pad * 1.5) / r.scores.length;
  const top2 = new Set(r.order.slice(0, 2));
  r.scores.forEach((s, i) => {
    const band = i + 1, bh = (s / max) * (h - pad * 1.5);
    ctx.fillStyle = r.informative.includes(band) ? "#d95f02" : "#8da0cb";
    ctx.fillRect(pad + i * bw + 3, h - pad - bh, bw - 6, bh);
    ctx.fillStyle = "#333";
    ctx.textAlign = "center";
    ctx.fillText(String(band), pad + (i + 0.5) * bw, h - pad + 15);
    if (top2.has(band)) ctx.fillText("▲", pad + (i + 0.5) * bw, h - pad - bh - 4);
  });
  ctx.textAlign = "left";
  ctx.fillText("band", w - pad, h - 8);
  ctx.fillText("orange = planted, ▲ = top two", pad + 8, 14);
}

function drawCurve(points) {
  const c = $("c-canvas"), ctx = c.getContext("2d");
  const pad = 44, w = c.width, h = c.height;
  axes(ctx, w, h, pad);
  const lo = 0.3, hi = 1.0;
  const xs = points.map((p) => Math.log(p.samples_per_class));
  const x0 = Math.min(...xs), x1 = Math.max(...xs) || 1;
  const X = (v) => pad + ((v - x0) / (x1 - x0 || 1)) * (w - pad * 2);
  const Y = (a) => h - pad - ((a - lo) / (hi - lo)) * (h - pad * 1.5);
  ctx.textAlign = "right";
  for (let a = 0.4; a <= 1.001; a += 0.2) {
    ctx.fillText(a.toFixed(1), pad - 6, Y(a) + 4);
  }
  ctx.textAlign = "center";
  points.forEach((p, i) => ctx.fillText(String(p.samples_per_class), X(xs[i]), h - pad + 16));
  ctx.fillText("training samples per class", w / 2, h - 6);
  for (const [key, color, name] of [["tensor", "#d95f02", "tensor LR"], ["vector", "#7570b3", "vector LR"]]) {
    ctx.strokeStyle = color;
    ctx.fillStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    points.forEach((p, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, X(xs[i]), Y(p[key])));
    ctx.stroke();
    points.forEach((p, i) => ctx.fillRect(X(xs[i]) - 3, Y(p[key]) - 3, 6, 6));
    ctx.textAlign = "left";
    ctx.fillText(name, X(xs[xs.length - 1]) - 70, Y(points[points.length - 1][key]) - 10);
  }
  ctx.lineWidth = 1;
}

function paint(id, width, height, color) {
  const c = $(id), ctx = c.getContext("2d");
  const sx = c.width / width, sy = c.height / height;
  for (let r = 0; r < height; r++) {
    for (let col = 0; col < width; col++) {
      ctx.fillStyle = color(r * width + col);
      ctx.fillRect(col * sx, r * sy, Math.ceil(sx), Math.ceil(sy));
    }
  }
}

function drawMaps(m) {
  const { width, height, truth, predicted } = m;
  paint("m-truth", width, height, (i) => PALETTE[truth[i] % PALETTE.length]);
  paint("m-pred", width, height, (i) => PALETTE[predicted[i] % PALETTE.length]);
  paint("m-err", width, height, (i) => (truth[i] === 0 ? "#808080" : truth[i] === predicted[i] ? "#000" : "#fff"));
}

await init();

$("b-run").onclick = () =>
  busy("b-status", "training…", () => {
    const r = JSON.parse(bandImportance(+$("b-seed").value, +$("b-signal").value));
    drawBands(r);
    return `top bands ${r.order.slice(0, 2).join(", ")}; test accuracy ${(100 * r.overall_accuracy).toFixed(1)}%`;
  });

$("c-run").onclick = () =>
  busy("c-status", "training both models for every size…", () => {
    const sizes = $("c-sizes").value.split(",").map((s) => parseInt(s, 10)).filter((n) => n > 0);
    const pts = JSON.parse(sampleCurve(0, Uint32Array.from(sizes), +$("c-runs").value));
    drawCurve(pts);
    return pts.map((p) => `${p.samples_per_class}: ${(100 * p.tensor).toFixed(0)}% vs ${(100 * p.vector).toFixed(0)}%`).join(" · ");
  });

$("m-run").onclick = () =>
  busy("m-status", "training…", () => {
    const m = JSON.parse(classificationMap(+$("m-seed").value, +$("m-spc").value, +$("m-model").value));
    drawMaps(m);
    return `test accuracy ${(100 * m.overall_accuracy).toFixed(1)}% with ${m.parameters} parameters`;
  });

$("b-run").click();
