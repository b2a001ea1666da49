import init, { patch, spectrum, coefficients } from "./pkg/cutproject_web.js";

const ids = ["lo", "hi", "s", "t", "radius", "kmax", "threshold"];
const field = (id) => parseFloat(document.getElementById(id).value);
const status = document.getElementById("status");

function drawPatch(view, lo, hi, radius) {
  const canvas = document.getElementById("patch");
  const ctx = canvas.getContext("2d");
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  // show at most 60 units around the origin so individual points stay visible
  const span = Math.min(radius, 30);
  const px = (x) => ((x + span) / (2 * span)) * width;
  const top = 20, bottom = height - 40;
  const py = (h) => bottom - ((h - lo) / (hi - lo)) * (bottom - top);

  ctx.fillStyle = "#f3f3f3";
  ctx.fillRect(0, top, width, bottom - top);
  ctx.fillStyle = "#36c";
  view.x.forEach((x, i) => {
    if (Math.abs(x) > span) return;
    ctx.beginPath();
    ctx.arc(px(x), py(view.h[i]), 2.5, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillRect(px(x) - 0.5, height - 28, 1, 16);
  });
  ctx.fillStyle = "#555";
  ctx.fillText("internal coordinate relative to t (window band)", 6, 14);
  ctx.fillText(`physical line, x in [${-span}, ${span}]`, 6, height - 2);
}

function drawSpectrum(peaks, kmax) {
  const canvas = document.getElementById("spectrum");
  const ctx = canvas.getContext("2d");
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const max = Math.max(...peaks.map((p) => p.intensity), 1e-12);
  const px = (k) => ((k + kmax) / (2 * kmax)) * width;
  ctx.strokeStyle = "#c33";
  for (const p of peaks) {
    const h = (p.intensity / max) * (height - 30);
    ctx.beginPath();
    ctx.moveTo(px(p.k), height - 15);
    ctx.lineTo(px(p.k), height - 15 - h);
    ctx.stroke();
  }
  ctx.fillStyle = "#555";
  ctx.fillText(`${peaks.length} peaks, k in [${-kmax}, ${kmax}]`, 6, 14);
}

const fmt = (v) => v.toFixed(5);
const complex = (re, im) => `${fmt(re)} ${im < 0 ? "−" : "+"} ${fmt(Math.abs(im))}i`;

function fillTable(rows) {
  const body = document.querySelector("#coefficients tbody");
  body.replaceChildren(
    ...rows.map((r) => {
      const tr = document.createElement("tr");
      for (const text of [
        fmt(r.k),
        fmt(r.intensity),
        fmt(r.empirical_intensity),
        complex(r.predicted_re, r.predicted_im),
        complex(r.empirical_re, r.empirical_im),
      ]) {
        const td = document.createElement("td");
        td.textContent = text;
        tr.append(td);
      }
      return tr;
    }),
  );
}

function update() {
  const [lo, hi, s, t, radius, kmax, threshold] = ids.map(field);
  try {
    const view = JSON.parse(patch(lo, hi, s, t, radius));
    document.getElementById("density").textContent =
      `${view.x.length} points, density ${view.density.toFixed(5)} (predicted ${view.predicted_density.toFixed(5)})`;
    drawPatch(view, lo, hi, radius);
    drawSpectrum(JSON.parse(spectrum(lo, hi, kmax, threshold)), kmax);
    fillTable(JSON.parse(coefficients(lo, hi, s, t, radius, 8)));
    status.textContent = "";
  } catch (e) {
    status.textContent = String(e);
  }
}

await init();
for (const id of ids) document.getElementById(id).addEventListener("change", update);
update();
