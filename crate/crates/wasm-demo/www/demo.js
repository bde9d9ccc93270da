import init, { simplex_paths, collapse_curves, drift_curves } from "./pkg/collapse_wasm.js";

const COLORS = { trace: "rgba(200, 160, 0, 0.45)", mean: "#c00", formula: "#06c", bound: "#c00" };

function values(form) {
  const v = {};
  for (const el of form.elements) {
    if (el.name) v[el.name] = el.value.trim();
  }
  return v;
}

function int(s) {
  const x = Number(s);
  if (!Number.isInteger(x) || x < 0) throw new Error(`not a non-negative integer: ${s}`);
  return x;
}

function num(s) {
  const x = Number(s);
  if (!Number.isFinite(x)) throw new Error(`not a number: ${s}`);
  return x;
}

function report(id, text, isError) {
  const el = document.getElementById(id);
  el.textContent = text;
  el.classList.toggle("error", Boolean(isError));
}

// Minimal line plot: series = [{ x, y, color, dash }].
function plot(canvas, title, series, yMax) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.x);
  const xMin = Math.min(...xs), xMax = Math.max(...xs);
  const top = yMax ?? Math.max(...series.flatMap((s) => s.y.filter(Number.isFinite)));
  const sx = (x) => pad + ((x - xMin) / (xMax - xMin || 1)) * (w - 1.5 * pad);
  const sy = (y) => h - pad - (y / (top || 1)) * (h - 1.7 * pad);
  ctx.strokeStyle = "#888";
  ctx.setLineDash([]);
  ctx.beginPath();
  ctx.moveTo(pad, sy(top));
  ctx.lineTo(pad, sy(0));
  ctx.lineTo(sx(xMax), sy(0));
  ctx.stroke();
  ctx.fillStyle = "#222";
  ctx.font = "12px sans-serif";
  ctx.fillText(title, pad, 16);
  ctx.fillText(top.toPrecision(3), 2, sy(top) + 4);
  ctx.fillText("0", pad - 12, sy(0) + 4);
  ctx.fillText(String(xMin), pad, h - pad + 14);
  ctx.fillText(String(xMax), sx(xMax) - 20, h - pad + 14);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dash ? [6, 4] : []);
    ctx.beginPath();
    s.x.forEach((x, i) => {
      const y = s.y[i];
      if (!Number.isFinite(y)) return;
      i === 0 ? ctx.moveTo(sx(x), sy(y)) : ctx.lineTo(sx(x), sy(y));
    });
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function drawSimplex(canvas, data) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  const corners = [[w / 2, 20], [20, h - 20], [w - 20, h - 20]];
  const at = (p) => [
    p[0] * corners[0][0] + p[1] * corners[1][0] + p[2] * corners[2][0],
    p[0] * corners[0][1] + p[1] * corners[1][1] + p[2] * corners[2][1],
  ];
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.moveTo(...corners[0]);
  ctx.lineTo(...corners[1]);
  ctx.lineTo(...corners[2]);
  ctx.closePath();
  ctx.stroke();
  ctx.fillStyle = "#222";
  ctx.fillText("token 0", corners[0][0] + 8, corners[0][1] + 4);
  ctx.fillText("token 1", corners[1][0], corners[1][1] + 14);
  ctx.fillText("token 2", corners[2][0] - 36, corners[2][1] + 14);
  ctx.strokeStyle = COLORS.trace;
  for (const path of data.paths) {
    ctx.beginPath();
    path.forEach((p, i) => (i === 0 ? ctx.moveTo(...at(p)) : ctx.lineTo(...at(p))));
    ctx.stroke();
  }
  ctx.fillStyle = COLORS.mean;
  const [x, y] = at(data.initial);
  ctx.beginPath();
  ctx.arc(x, y, 4, 0, 2 * Math.PI);
  ctx.fill();
}

function runSimplex(form) {
  const v = values(form);
  const p0 = v.p0.split(",").map(num);
  const data = JSON.parse(simplex_paths(p0, int(v.n), int(v.generations), int(v.chains), int(v.seed)));
  drawSimplex(document.getElementById("simplex-canvas"), data);
  const done = data.collapse_times.filter((t) => t !== null);
  return `${done.length} of ${data.paths.length} chains reached a vertex`;
}

function runCollapse(form) {
  const v = values(form);
  const d = JSON.parse(collapse_curves(int(v.size), int(v.support), num(v.s0), int(v.n),
    int(v.generations), int(v.replicates), int(v.seed)));
  const x = d.generation;
  plot(document.getElementById("collapse-sigma"), "collision probability", [
    { x, y: d.sigma_mean, color: COLORS.mean },
    { x, y: d.sigma_formula, color: COLORS.formula, dash: true },
  ], 1);
  plot(document.getElementById("collapse-rho"), "fraction collapsed, with bounds", [
    { x, y: d.rho, color: COLORS.mean },
    { x, y: d.rho_lower, color: COLORS.bound, dash: true },
    { x, y: d.rho_upper, color: COLORS.bound, dash: true },
  ], 1);
  const t = d.mean_collapse_time === null ? "NA" : d.mean_collapse_time.toFixed(1);
  return `collapsed ${d.collapsed}/${d.replicates}; mean collapse time ${t} ` +
    `(bounds ${d.t_lower.toFixed(1)} to ${d.t_upper.toFixed(1)})`;
}

function runDrift(form) {
  const v = values(form);
  const d = JSON.parse(drift_curves(int(v.size), int(v.support), num(v.s0), int(v.real), int(v.n),
    int(v.generations), int(v.replicates), int(v.seed)));
  const x = d.generation;
  const top = Math.max(...d.drift_mean) * 1.2;
  // the bound is usually far above the drift; draw it only when it fits
  const bound = d.bound <= top * 3 ? [{ x, y: x.map(() => d.bound), color: COLORS.bound, dash: true }] : [];
  plot(document.getElementById("drift-canvas"), "L1 distance to the first model", [
    { x, y: d.drift_mean, color: COLORS.mean },
    ...bound,
  ]);
  plot(document.getElementById("drift-sigma"), "collision probability", [
    { x, y: d.sigma_mean, color: COLORS.mean },
    { x, y: d.sigma_formula, color: COLORS.formula, dash: true },
  ]);
  const last = d.drift_mean[d.drift_mean.length - 1];
  return `final drift ${last.toExponential(3)}; bound ${d.bound.toPrecision(4)}` +
    (d.bound_vacuous ? " (vacuous)" : "");
}

function wire(id, statusId, fn) {
  const form = document.getElementById(id);
  const go = () => {
    report(statusId, "running...");
    setTimeout(() => {
      try {
        const t0 = performance.now();
        const msg = fn(form);
        report(statusId, `${msg}  [${((performance.now() - t0) / 1000).toFixed(2)} s]`);
      } catch (e) {
        report(statusId, String(e.message ?? e), true);
      }
    }, 0);
  };
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    go();
  });
  go();
}

await init();
wire("simplex", "simplex-status", runSimplex);
wire("collapse", "collapse-status", runCollapse);
wire("drift", "drift-status", runDrift);
