import init, { defaultParams, trajectory, accuracyCurve, heatmap } from "./pkg/winpred_demo.js";

const COLORS = { lr: "#1f77b4", asm: "#d62728", concat: "#2ca02c", gold: "#999" };
const $ = (id) => document.getElementById(id);

function params() {
  const p = JSON.parse(defaultParams());
  for (const key of ["n_matches", "seed", "bins", "match_index"]) p[key] = parseInt($(key).value, 10);
  for (const key of ["drift", "noise", "early_drift_factor"]) p[key] = parseFloat($(key).value);
  return JSON.stringify(p);
}

function guarded(fn) {
  return () => {
    $("status").textContent = "working...";
    setTimeout(() => {
      try {
        fn();
        $("status").textContent = "";
      } catch (e) {
        $("status").textContent = String(e.message || e);
      }
    }, 10);
  };
}

function axes(ctx, w, h, pad, xMax, yLabel) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
  ctx.fillStyle = "#444";
  ctx.fillText(yLabel, 4, pad - 8);
  ctx.fillText("minute", w - pad - 30, h - 8);
  for (let t = 0; t <= xMax; t += 5) {
    const x = pad + ((w - 2 * pad) * t) / xMax;
    ctx.fillText(String(t), x - 4, h - pad + 14);
  }
  for (const v of [0, 0.5, 1]) {
    const y = h - pad - (h - 2 * pad) * v;
    ctx.fillText(v.toFixed(1), 8, y + 4);
    ctx.strokeStyle = "#eee";
    ctx.beginPath();
    ctx.moveTo(pad, y);
    ctx.lineTo(w - pad, y);
    ctx.stroke();
  }
}

function line(ctx, w, h, pad, xMax, points, color, yMin = 0, yMax = 1) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  points.forEach(([t, v], i) => {
    const x = pad + ((w - 2 * pad) * t) / xMax;
    const y = h - pad - ((h - 2 * pad) * (v - yMin)) / (yMax - yMin);
    i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.lineWidth = 1;
}

function legend(id, names) {
  $(id).innerHTML = names.map((n) => `<span style="color:${COLORS[n]}">&#9632; ${n}</span>`).join("");
}

function drawTrajectory() {
  const v = JSON.parse(trajectory(params()));
  const c = $("traj"), ctx = c.getContext("2d"), pad = 36;
  const xMax = Math.max(v.duration, 5);
  axes(ctx, c.width, c.height, pad, xMax, "P(Radiant)");
  const g = v.gold_diff, gMax = Math.max(1, ...g.map(Math.abs));
  line(ctx, c.width, c.height, pad, xMax, g.map((d, t) => [t, d]), COLORS.gold, -gMax, gMax);
  for (const [name, pts] of v.series) line(ctx, c.width, c.height, pad, xMax, pts, COLORS[name]);
  $("traj-info").textContent =
    `match ${v.match_id}: ${v.radiant_won ? "Radiant" : "Dire"} won after ${v.duration} minutes ` +
    `(grey: gold difference, scaled)`;
  legend("traj-legend", v.series.map((s) => s[0]));
}

function drawCurve() {
  const v = JSON.parse(accuracyCurve(params()));
  const c = $("curve"), ctx = c.getContext("2d"), pad = 36;
  axes(ctx, c.width, c.height, pad, 45, "accuracy");
  for (const [name, pts] of v.series) {
    line(ctx, c.width, c.height, pad, 45, pts.map((p) => [p.minute, p.accuracy]), COLORS[name]);
  }
  legend("curve-legend", v.series.map((s) => s[0]));
}

function drawHeatmap() {
  const v = JSON.parse(heatmap(params(), $("channel").value, $("outcome").value === "true"));
  const c = $("heat"), ctx = c.getContext("2d"), pad = 30;
  const k = v.n_bins, cell = (c.width - 2 * pad) / k;
  ctx.clearRect(0, 0, c.width, c.height);
  const max = Math.max(...v.matrix.flat());
  v.matrix.forEach((row, i) =>
    row.forEach((p, j) => {
      const shade = Math.round(255 * (1 - p / max));
      ctx.fillStyle = `rgb(${shade},${shade},255)`;
      ctx.fillRect(pad + j * cell, pad + i * cell, cell, cell);
    })
  );
  ctx.fillStyle = "#444";
  ctx.fillText("to bin", c.width / 2 - 15, 18);
  ctx.save();
  ctx.translate(14, c.height / 2 + 20);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText("from bin", 0, 0);
  ctx.restore();
}

await init();
for (const input of document.querySelectorAll("input[type=range]")) {
  const out = input.nextElementSibling;
  const show = () => (out.textContent = input.value);
  input.addEventListener("input", show);
  show();
}
$("run-trajectory").addEventListener("click", guarded(drawTrajectory));
$("run-curve").addEventListener("click", guarded(drawCurve));
$("run-heatmap").addEventListener("click", guarded(drawHeatmap));
