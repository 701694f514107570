import init, { random_instance, shares_table, run_allocation, counterexample_curve } from "./pkg/wmms_web.js";

const $ = (id) => document.getElementById(id);

function parse(text, out) {
  const value = JSON.parse(text);
  if (value.error) {
    out.innerHTML = `<p class="error">${value.error}</p>`;
    return null;
  }
  return value;
}

function table(headers, rows) {
  const head = headers.map((h) => `<th>${h}</th>`).join("");
  const body = rows.map((r) => `<tr>${r.map((c) => `<td>${c}</td>`).join("")}</tr>`).join("");
  return `<table><tr>${head}</tr>${body}</table>`;
}

function fillRandom() {
  const text = random_instance(+$("n").value, +$("m").value, BigInt($("seed").value));
  $("instance").value = JSON.stringify(JSON.parse(text), null, 1);
}

function showShares() {
  const out = $("shares-out");
  const res = parse(shares_table($("instance").value), out);
  if (!res) return;
  out.innerHTML = `<p>method: ${res.method}</p>` +
    table(["agent", "entitlement", "share", "e_i V_i(M)"],
      res.rows.map((r) => [r.agent, r.entitlement, r.share, r.proportional]));
}

function showAllocation() {
  const out = $("alloc-out");
  const res = parse(run_allocation($("instance").value, $("alg").value), out);
  if (!res) return;
  out.innerHTML = `<p>min ratio ${res.min_ratio} (shares: ${res.share_method})</p>` +
    table(["agent", "items", "value", "share", "ratio"],
      res.agents.map((a) => [a.agent, a.items.join(" "), a.received, a.share, a.ratio]));
}

function plot() {
  const out = $("curve-out");
  const pts = parse(counterexample_curve(+$("ce-n").value, +$("ce-lo").value, +$("ce-hi").value), out);
  if (!pts || pts.length === 0) return;
  const w = 560, h = 260, pad = 36;
  const ys = pts.flatMap((p) => [p.ratio, p.upper, p.floor]);
  const lo = Math.min(...ys), hi = Math.max(...ys);
  const x = (i) => pad + (i * (w - 2 * pad)) / Math.max(1, pts.length - 1);
  const y = (v) => h - pad - ((v - lo) * (h - 2 * pad)) / (hi - lo || 1);
  const line = (key, color) =>
    `<polyline fill="none" stroke="${color}" stroke-width="2" points="${pts.map((p, i) => `${x(i)},${y(p[key])}`).join(" ")}"/>`;
  out.innerHTML =
    `<svg width="${w}" height="${h}">` +
    line("upper", "#c60") + line("ratio", "#06c") + line("floor", "#888") +
    `<text x="${pad}" y="${pad - 10}" font-size="12">best ratio (blue), upper bound (orange), 1/n (grey)</text>` +
    `<text x="${pad}" y="${h - 8}" font-size="12">eps = ${pts[0].epsilon}</text>` +
    `<text x="${w - pad - 60}" y="${h - 8}" font-size="12">eps = ${pts[pts.length - 1].epsilon}</text>` +
    `</svg>`;
}

await init();
$("random").onclick = fillRandom;
$("shares").onclick = showShares;
$("allocate").onclick = showAllocation;
$("curve").onclick = plot;
fillRandom();
