import init, { miCurve, ascent, scalarFilter } from "./pkg/kalman_mi_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function frame(canvas, xs, series) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 36;
  ctx.clearRect(0, 0, w, h);
  const ys = series.flatMap((s) => s.ys).filter(Number.isFinite);
  let [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (x0 === x1) x1 = x0 + 1;
  if (y0 === y1) y1 = y0 + 1;
  const px = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (y) => h - pad + ((y - y0) / (y1 - y0)) * (2 * pad - h);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad / 2, w - 2 * pad, h - 1.5 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.fillText(y1.toPrecision(3), 2, pad / 2 + 10);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);
  ctx.fillText(x0.toPrecision(3), pad, h - pad / 2 + 8);
  ctx.fillText(x1.toPrecision(3), w - pad - 30, h - pad / 2 + 8);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.fillStyle = s.color;
    ctx.setLineDash(s.dash || []);
    if (s.dots) {
      s.ys.forEach((y, i) => ctx.fillRect(px(xs[i]) - 1, py(y) - 1, 2, 2));
      continue;
    }
    ctx.beginPath();
    s.ys.forEach((y, i) => (i ? ctx.lineTo(px(xs[i]), py(y)) : ctx.moveTo(px(xs[i]), py(y))));
    ctx.stroke();
  }
  ctx.setLineDash([]);
  return { px, py };
}

function guarded(outId, f) {
  return () => {
    $(outId).classList.remove("err");
    try {
      f();
    } catch (e) {
      $(outId).classList.add("err");
      $(outId).textContent = String(e.message || e);
    }
  };
}

function runCurve() {
  const c = JSON.parse(
    miCurve(num("c-sigma"), num("c-h"), num("c-r"), num("c-kmin"), num("c-kmax"), 400),
  );
  const canvas = $("c-plot");
  const { px, py } = frame(canvas, c.gains, [{ ys: c.mi_nats, color: "#1f5fa8" }]);
  const ctx = canvas.getContext("2d");
  ctx.fillStyle = "#c0392b";
  ctx.beginPath();
  ctx.arc(px(c.optimal_gain), py(c.optimal_mi_nats), 4, 0, 2 * Math.PI);
  ctx.fill();
  $("c-out").textContent =
    `Kalman gain K* = ${c.optimal_gain.toPrecision(8)}   ` +
    `I(K*) = ${c.optimal_mi_nats.toPrecision(8)} nats`;
}

function runAscent() {
  const t = JSON.parse(
    ascent(num("a-sigma"), num("a-h"), num("a-r"), num("a-k0"), num("a-iter"), $("a-bb").checked),
  );
  const xs = t.mi_nats.map((_, i) => i);
  const logGrad = t.gradient_norm.map((g) => Math.log10(Math.max(g, 1e-300)));
  frame($("a-plot"), xs, [{ ys: t.mi_nats, color: "#1f5fa8" }]);
  $("a-out").textContent =
    `${t.converged ? "converged" : "stopped"} after ${t.iterations} iterations\n` +
    `final K = ${t.final_gain.toPrecision(10)}   K* = ${t.optimal_gain.toPrecision(10)}\n` +
    `log10 |grad|: start ${logGrad[0].toFixed(2)}, end ${logGrad[logGrad.length - 1].toFixed(2)}`;
}

function runFilter() {
  const r = JSON.parse(
    scalarFilter(
      num("f-phi"), num("f-q"), num("f-h"), num("f-r"), num("f-p0"),
      num("f-steps"), BigInt(Math.trunc(num("f-seed"))),
    ),
  );
  const ks = r.truth.map((_, i) => i + 1);
  const hi = r.estimates.map((x, i) => x + r.std_devs[i]);
  const lo = r.estimates.map((x, i) => x - r.std_devs[i]);
  frame($("f-plot"), ks, [
    { ys: r.truth, color: "#222" },
    { ys: r.estimates, color: "#1f5fa8" },
    { ys: hi, color: "#7fa7d6", dash: [4, 3] },
    { ys: lo, color: "#7fa7d6", dash: [4, 3] },
  ]);
  frame($("f-mi"), ks, [{ ys: r.mi_nats, color: "#c0392b" }]);
  $("f-out").textContent =
    `truth (black), estimate ± 1σ (blue); per-step MI in nats (red)\n` +
    `cumulative MI ${r.cumulative_mi_nats.toFixed(4)} nats   mean NEES ${r.mean_nees.toFixed(3)}`;
}

await init();
for (const [button, out, f] of [
  ["c-run", "c-out", runCurve],
  ["a-run", "a-out", runAscent],
  ["f-run", "f-out", runFilter],
]) {
  const g = guarded(out, f);
  $(button).addEventListener("click", g);
  g();
}
