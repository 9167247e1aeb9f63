import init, { analyze, output_distribution, round_trip } from "./pkg/ecs_wasm.js";

const $ = (id) => document.getElementById(id);

function run(errId, f) {
  $(errId).textContent = "";
  try {
    f();
  } catch (e) {
    $(errId).textContent = String(e);
  }
}

function fillTable(table, header, rows) {
  table.replaceChildren();
  if (header) {
    const tr = table.insertRow();
    for (const h of header) {
      const th = document.createElement("th");
      th.textContent = h;
      tr.appendChild(th);
    }
  }
  for (const row of rows) {
    const tr = table.insertRow();
    for (const cell of row) tr.insertCell().textContent = cell;
  }
}

// Bars share one vertical scale so both charts are comparable.
function drawBars(canvas, masses, top) {
  const ctx = canvas.getContext("2d");
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const w = width / masses.length;
  const uniform = 1 / masses.length;
  ctx.fillStyle = "#4a7";
  masses.forEach((m, i) => {
    const h = (m / top) * (height - 4);
    ctx.fillRect(i * w, height - h, Math.max(w - 1, 1), h);
  });
  const y = height - (uniform / top) * (height - 4);
  ctx.strokeStyle = "#c33";
  ctx.beginPath();
  ctx.moveTo(0, y);
  ctx.lineTo(width, y);
  ctx.stroke();
}

function inputs() {
  return [$("dist").value, $("eps").value.trim()];
}

function doAnalyze() {
  run("analyze-err", () => {
    const v = JSON.parse(analyze(...inputs()));
    fillTable($("params"), null, Object.entries(v.params));
    fillTable(
      $("codebook"),
      ["rank", "symbol", "prob", "codeword"],
      v.codebook.map((r, i) => [i, r.symbol, r.prob, r.codeword]),
    );
  });
}

function doChart() {
  run("chart-err", () => {
    const v = JSON.parse(output_distribution(...inputs(), $("control").checked));
    const top = Math.max(...v.padded, ...v.ciphertext);
    drawBars($("before"), v.padded, top);
    drawBars($("after"), v.ciphertext, top);
    const verdict = v.pass ? '<span class="pass">PASS</span>' : '<span class="fail">FAIL</span>';
    $("sd").innerHTML =
      `distance to uniform: padded ${v.sd_padded}, ciphertext ${v.sd_ciphertext} ` +
      `(~${v.sd_ciphertext_float.toPrecision(4)}), epsilon ${v.epsilon} ${verdict}`;
  });
}

function doTrip() {
  run("trip-err", () => {
    const seed = Number($("seed").value) >>> 0;
    const v = JSON.parse(round_trip(...inputs(), $("msg").value.trim(), seed));
    fillTable($("trace"), null, [
      ["key", v.key],
      ["codeword", v.codeword],
      ["padded block", v.block],
      ["pad", v.pad],
      ["ciphertext", v.ciphertext],
      ["envelope", v.envelope_hex],
      ["decrypted", v.decrypted],
    ]);
  });
}

await init();
$("analyze").onclick = doAnalyze;
$("chart").onclick = doChart;
$("trip").onclick = doTrip;
doAnalyze();
doChart();
