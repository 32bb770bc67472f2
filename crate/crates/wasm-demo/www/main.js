import init, { pValueField, detectBatch, pValueFloors } from "./pkg/conformal_ad_demo.js";

const EXTENT = 6;
const RES = 60;

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

// View transform shared by both canvases: [-EXTENT, EXTENT]^2 -> pixels, y up.
function toPixel(canvas, [x, y]) {
  const s = canvas.width / (2 * EXTENT);
  return [(x + EXTENT) * s, canvas.height - (y + EXTENT) * s];
}

function drawField(field) {
  const canvas = $("field");
  const ctx = canvas.getContext("2d");
  const cell = canvas.width / field.resolution;
  for (let i = 0; i < field.resolution; i++) {
    for (let j = 0; j < field.resolution; j++) {
      const p = field.p_values[i * field.resolution + j];
      // log scale so the region near the floor stays visible
      const t = Math.max(0, 1 + Math.log10(p) / 3);
      const shade = Math.round(255 * t);
      ctx.fillStyle = `rgb(${255 - shade / 3}, ${shade}, ${80 + shade / 2})`;
      ctx.fillRect(j * cell, canvas.height - (i + 1) * cell, cell + 1, cell + 1);
    }
  }
  ctx.fillStyle = "#000";
  for (const pt of field.train) {
    const [px, py] = toPixel(canvas, pt);
    ctx.fillRect(px - 1, py - 1, 2, 2);
  }
  const floor = 1 / (field.n_cal + 1);
  $("field-info").textContent =
    `${field.strategy}: n_cal = ${field.n_cal}, p ≥ ${floor.toExponential(2)} (colour: log10 p from -3 to 0)`;
}

function drawBatch(batch) {
  const canvas = $("batch");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  batch.points.forEach((pt, i) => {
    const [px, py] = toPixel(canvas, pt);
    const colour = batch.outlier[i] ? "#d33" : "#2a6";
    ctx.beginPath();
    ctx.arc(px, py, 4, 0, 2 * Math.PI);
    if (batch.rejected[i]) {
      ctx.fillStyle = colour;
      ctx.fill();
    } else {
      ctx.strokeStyle = colour;
      ctx.stroke();
    }
  });
  const nRej = batch.rejected.filter(Boolean).length;
  $("batch-info").textContent =
    `${nRej} rejected · FDP ${batch.fdp.toFixed(3)} · power ${batch.power.toFixed(3)} · n_cal ${batch.n_cal}`;
}

function drawFloors(floors) {
  const body = $("floors").querySelector("tbody");
  body.replaceChildren(
    ...floors.map((f) => {
      const tr = document.createElement("tr");
      for (const v of [f.method, f.n_cal, f.floor.toExponential(3)]) {
        const td = document.createElement("td");
        td.textContent = v;
        tr.appendChild(td);
      }
      return tr;
    }),
  );
}

function run() {
  $("error").textContent = "";
  const detector = $("detector").value;
  const method = $("method").value;
  const nTrain = num("n-train");
  const seed = num("seed");
  try {
    drawField(JSON.parse(pValueField(detector, method, nTrain, seed, EXTENT, RES)));
    drawBatch(JSON.parse(detectBatch(
      detector, method, nTrain, num("n-in"), num("n-out"), num("shift"), num("alpha"), seed,
    )));
    drawFloors(JSON.parse(pValueFloors(nTrain, seed)));
  } catch (e) {
    $("error").textContent = String(e.message ?? e);
  }
}

await init();
$("run").addEventListener("click", run);
for (const id of ["detector", "method"]) $(id).addEventListener("change", run);
run();
