import init, { occlusionField, gaussianMap, runPreset, presetNames } from "./pkg/oasort_web.js";

await init();

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22"];
const color = (i) => COLORS[i % COLORS.length];

// Occlusion field

const field = $("field");
const fctx = field.getContext("2d");
let boxes = [[180, 60, 270, 280], [240, 90, 330, 320], [420, 120, 500, 300]];
let drag = null;

function drawField() {
  const w = field.width, h = field.height;
  const kx = +$("kx").value, ky = +$("ky").value, thre = +$("thre").value;
  const json = JSON.stringify(boxes);
  let info;
  try {
    info = JSON.parse(occlusionField(json, w, h, thre, kx, ky));
    const px = gaussianMap(json, w, h, kx, ky);
    fctx.putImageData(new ImageData(new Uint8ClampedArray(px), w, h), 0, 0);
  } catch (e) {
    $("coeffs").innerHTML = `<tr><td>${e}</td></tr>`;
    return;
  }
  boxes.forEach((b, i) => {
    fctx.strokeStyle = color(i);
    fctx.lineWidth = 2;
    fctx.strokeRect(b[0], b[1], b[2] - b[0], b[3] - b[1]);
    fctx.fillStyle = color(i);
    fctx.fillText(`#${i}`, b[0] + 4, b[1] + 12);
  });
  const rows = boxes.map((_, i) =>
    `<tr><td style="color:${color(i)}">#${i}</td><td>${info.raw[i].toFixed(3)}</td>` +
    `<td>${info.refined[i].toFixed(3)}</td><td>${info.occluders[i].map((j) => "#" + j).join(" ") || "-"}</td></tr>`);
  $("coeffs").innerHTML = "<tr><th></th><th>raw</th><th>refined</th><th>in front</th></tr>" + rows.join("");
}

function hit(x, y) {
  for (let i = boxes.length - 1; i >= 0; i--) {
    const [l, t, r, b] = boxes[i];
    if (x >= l && x <= r && y >= t && y <= b) return i;
  }
  return -1;
}

field.addEventListener("pointerdown", (ev) => {
  const i = hit(ev.offsetX, ev.offsetY);
  if (i >= 0) {
    drag = { i, x: ev.offsetX, y: ev.offsetY };
    field.setPointerCapture(ev.pointerId);
  }
});
field.addEventListener("pointermove", (ev) => {
  if (!drag) return;
  const dx = ev.offsetX - drag.x, dy = ev.offsetY - drag.y;
  const b = boxes[drag.i];
  boxes[drag.i] = [b[0] + dx, b[1] + dy, b[2] + dx, b[3] + dy];
  drag.x = ev.offsetX;
  drag.y = ev.offsetY;
  drawField();
});
field.addEventListener("pointerup", () => (drag = null));
$("add").addEventListener("click", () => {
  boxes.push([40, 40, 110, 200]);
  drawField();
});
for (const id of ["thre", "kx", "ky"]) $(id).addEventListener("input", drawField);
drawField();

// Scenario playback

const play = $("play");
const pctx = play.getContext("2d");
let run = null;

for (const name of presetNames()) {
  const opt = document.createElement("option");
  opt.textContent = name;
  $("preset").appendChild(opt);
}

function drawFrame() {
  if (!run) return;
  const f = run.frames[+$("frame").value - 1];
  const [w, h] = run.image;
  const s = Math.min(play.width / w, play.height / h);
  pctx.clearRect(0, 0, play.width, play.height);
  const rect = (b) => [b[0] * s, b[1] * s, (b[2] - b[0]) * s, (b[3] - b[1]) * s];
  pctx.setLineDash([4, 4]);
  pctx.strokeStyle = "#999";
  for (const d of f.dets) pctx.strokeRect(...rect(d.box));
  pctx.setLineDash([]);
  pctx.lineWidth = 2;
  for (const t of f.tracks) {
    pctx.strokeStyle = pctx.fillStyle = color(t.id);
    pctx.strokeRect(...rect(t.box));
    pctx.fillText(`id ${t.id}`, t.box[0] * s + 4, t.box[1] * s + 12);
  }
  const oc = f.gt.map((g) => `gt ${g.id}: occlusion ${g.oc.toFixed(2)}`).join(", ");
  const scores = f.dets.map((d) => d.score.toFixed(2)).join(", ");
  $("frameinfo").textContent = `frame ${f.frame}; ${oc}; detection scores ${scores}`;
}

$("run").addEventListener("click", () => {
  run = JSON.parse(runPreset($("preset").value, $("oao").checked, $("bam").checked, $("gm").checked));
  $("frame").max = run.frames.length;
  const m = run.metrics;
  $("metrics").innerHTML =
    `<table><tr><th>MOTA</th><th>IDF1</th><th>IDSW</th><th>FP</th><th>FN</th></tr>` +
    `<tr><td>${m.mota.toFixed(3)}</td><td>${m.idf1.toFixed(3)}</td><td>${m.idsw}</td><td>${m.fp}</td><td>${m.fn}</td></tr></table>`;
  drawFrame();
});
$("frame").addEventListener("input", drawFrame);
