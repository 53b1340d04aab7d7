import init, { ttc, dtw, segment } from "./pkg/lcpat_demo.js";

const $ = (id) => document.getElementById(id);
const nums = (id) => $(id).value.split(",").map((s) => Number(s.trim()));
const COLORS = ["#1b6ca8", "#d1495b", "#2a9d8f", "#e9c46a", "#6d597a", "#f4a261", "#264653", "#8ab17d", "#b5838d", "#457b9d"];

function guard(out, fn) {
  try {
    fn();
  } catch (e) {
    $(out).textContent = "error: " + (e.message ?? e);
  }
}

function drawCars(a, b, t) {
  const c = $("ttc-canvas"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const xs = [a[0], b[0], a[0] + a[2] * t, b[0] + b[2] * t];
  const x0 = Math.min(...xs) - 10, x1 = Math.max(...xs) + 10;
  const sx = c.width / (x1 - x0), sy = 12, cy = c.height / 2;
  const rect = (v, dt, color, dash) => {
    const x = v[0] + v[2] * dt, y = v[1] + v[3] * dt;
    g.setLineDash(dash);
    g.strokeStyle = color;
    g.strokeRect((x - v[4] / 2 - x0) * sx, cy - (y + v[5] / 2) * sy, v[4] * sx, v[5] * sy);
  };
  rect(a, 0, COLORS[0], []);
  rect(b, 0, COLORS[1], []);
  if (t > 0) {
    rect(a, t, COLORS[0], [4, 3]);
    rect(b, t, COLORS[1], [4, 3]);
  }
  g.setLineDash([]);
}

function runTtc() {
  const a = nums("ttc-a"), b = nums("ttc-b");
  const r = JSON.parse(ttc(new Float64Array(a), new Float64Array(b)));
  const lines = [`geometry: type ${r.geometry}`, `ttc: ${r.ttc === null ? "none (no collision course)" : r.ttc.toFixed(3) + " s"}`];
  if (r.overlap) lines.push(`overlap window: ${r.overlap[0].toFixed(3)} s to ${r.overlap[1].toFixed(3)} s`);
  $("ttc-out").textContent = lines.join("\n");
  drawCars(a, b, r.ttc ?? 0);
}

function runDtw() {
  const a = nums("dtw-a"), b = nums("dtw-b");
  const r = JSON.parse(dtw(new Float64Array(a), new Float64Array(b)));
  $("dtw-out").textContent = `distance: ${r.distance.toFixed(4)}   path length: ${r.path.length}`;
  const c = $("dtw-canvas"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const all = a.concat(b), lo = Math.min(...all), hi = Math.max(...all) || 1;
  const px = (i, n) => 20 + (i * (c.width - 40)) / Math.max(n - 1, 1);
  const py = (v, top) => top + 80 - ((v - lo) / (hi - lo || 1)) * 70;
  g.strokeStyle = "#bbb";
  for (const [i, j] of r.path) {
    g.beginPath();
    g.moveTo(px(i, a.length), py(a[i], 10));
    g.lineTo(px(j, b.length), py(b[j], 140));
    g.stroke();
  }
  [[a, 10, COLORS[0]], [b, 140, COLORS[1]]].forEach(([s, top, color]) => {
    g.strokeStyle = color;
    g.beginPath();
    s.forEach((v, i) => (i ? g.lineTo : g.moveTo).call(g, px(i, s.length), py(v, top)));
    g.stroke();
  });
}

function runSegment() {
  const r = JSON.parse(segment(Number($("seg-seed").value), Number($("seg-sep").value), Number($("seg-nmax").value)));
  const cps = r.states.flatMap((s, t) => (t && s !== r.states[t - 1] ? [t] : []));
  const cands = r.candidates.map(([n, ll]) => `N=${n}: ${ll.toFixed(1)}`).join(", ");
  $("seg-out").textContent = `selected N = ${r.n_star}\nchange points: ${cps.join(", ") || "none"} (truth 40, 80)\nlog-likelihoods: ${cands}` +
    (r.stop_reason ? `\nsweep stopped: ${r.stop_reason}` : "");
  const c = $("seg-canvas"), g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const T = r.signal.length;
  const flat = r.signal.flat(), lo = Math.min(...flat), hi = Math.max(...flat);
  const px = (t) => 10 + (t * (c.width - 20)) / (T - 1);
  const py = (v) => c.height - 20 - ((v - lo) / (hi - lo || 1)) * (c.height - 40);
  r.states.forEach((s, t) => {
    g.fillStyle = COLORS[s % COLORS.length] + "33";
    g.fillRect(px(t) - 2.5, 0, 5, c.height - 12);
  });
  [0, 1].forEach((d) => {
    g.strokeStyle = d ? "#555" : "#000";
    g.beginPath();
    r.signal.forEach((p, t) => (t ? g.lineTo : g.moveTo).call(g, px(t), py(p[d])));
    g.stroke();
  });
  g.fillStyle = "#000";
  [40, 80].forEach((t) => g.fillRect(px(t) - 0.5, c.height - 12, 1, 12));
}

await init();
$("status").textContent = "ready";
$("ttc-run").onclick = () => guard("ttc-out", runTtc);
$("dtw-run").onclick = () => guard("dtw-out", runDtw);
$("seg-run").onclick = () => guard("seg-out", runSegment);
guard("ttc-out", runTtc);
guard("dtw-out", runDtw);
