import init, { classifyView, rocExplorer, parseReport } from "./pkg/coro_wasm_demo.js";

const $ = (id) => document.getElementById(id);

function show(el, fn) {
  try {
    const out = fn();
    el.classList.remove("error");
    return out;
  } catch (e) {
    el.classList.add("error");
    el.textContent = String(e);
    return null;
  }
}

function updateView() {
  const p = Number($("primary").value);
  const s = Number($("secondary").value);
  $("primary-val").textContent = p;
  $("secondary-val").textContent = s;
  const r = show($("view-out"), () => JSON.parse(classifyView(p, s)));
  if (r) $("view-out").textContent = r.view;
}

function drawRoc(summary) {
  const c = $("roc").getContext("2d");
  const w = c.canvas.width, h = c.canvas.height;
  c.clearRect(0, 0, w, h);
  c.strokeStyle = "#bbb";
  c.beginPath(); c.moveTo(0, h); c.lineTo(w, 0); c.stroke();
  c.strokeStyle = "#1565c0";
  c.lineWidth = 2;
  c.beginPath();
  summary.curve.forEach((pt, i) => {
    const x = pt.fpr * w, y = h - pt.tpr * h;
    i === 0 ? c.moveTo(x, y) : c.lineTo(x, y);
  });
  c.stroke();
  const mark = (op, colour) => {
    c.fillStyle = colour;
    c.beginPath();
    c.arc((1 - op.specificity) * w, h - op.sensitivity * h, 5, 0, 2 * Math.PI);
    c.fill();
  };
  mark(summary.youden, "#c62828");
  if (summary.at_threshold) mark(summary.at_threshold, "#2e7d32");
}

function updateRoc() {
  const t = Number($("threshold").value);
  $("threshold-val").textContent = t.toFixed(2);
  const r = show($("roc-out"), () => JSON.parse(rocExplorer($("scores").value, $("labels").value, t)));
  if (!r) return;
  drawRoc(r);
  const fmt = (x) => (x === null || x === undefined ? "n/a" : x.toFixed(3));
  const op = (o) => `threshold ${fmt(o.threshold)}  sens ${fmt(o.sensitivity)}  specificity ${fmt(o.specificity)}  PPV ${fmt(o.ppv)}  NPV ${fmt(o.npv)}`;
  $("roc-out").textContent = [
    `n ${r.n}, positives ${r.n_positive}`,
    `AUROC ${fmt(r.auroc)}   AUPRC ${fmt(r.auprc)}`,
    `Youden (red):    ${op(r.youden)}  J ${fmt(r.youden.youden_j)}`,
    `Slider (green):  ${op(r.at_threshold)}`,
  ].join("\n");
}

function updateReport() {
  const r = show($("report-out"), () => JSON.parse(parseReport($("report").value, $("territory").value, $("dominance").value)));
  if (r) $("report-out").textContent = JSON.stringify(r, null, 2);
}

await init();
for (const id of ["primary", "secondary"]) $(id).addEventListener("input", updateView);
for (const id of ["scores", "labels", "threshold"]) $(id).addEventListener("input", updateRoc);
for (const id of ["report", "territory", "dominance"]) $(id).addEventListener("input", updateReport);
updateView();
updateRoc();
updateReport();
