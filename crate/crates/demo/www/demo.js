// Page wiring for the moment-lift demo. Expects the wasm package built into
// ./pkg (see the crate README).
import init, {
  generate_object,
  recover_moment,
  reweight_compare,
} from "./pkg/moment_lift_demo.js";

await init();

const $ = (id) => document.getElementById(id);

function setStatus(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.classList.toggle("error", isError);
}

function fmt(x, digits = 5) {
  if (x === null || x === undefined) return "–";
  if (x === 0) return "0";
  const a = Math.abs(x);
  return a >= 1e-3 && a < 1e4 ? x.toFixed(digits) : x.toExponential(2);
}

// ---------------------------------------------------------------- object --

function drawObject(objectJson) {
  const canvas = $("object-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);

  let obj;
  try {
    obj = JSON.parse(objectJson);
  } catch {
    return;
  }

  // Project everything onto the first two coordinates; the third (if any)
  // sets the hue so depth stays visible.
  const extent = 4.5;
  const toPx = (v) => ((v + extent) / (2 * extent)) * canvas.width;
  ctx.strokeStyle = "rgba(128,128,128,0.5)";
  ctx.beginPath();
  ctx.moveTo(toPx(-extent), toPx(0));
  ctx.lineTo(toPx(extent), toPx(0));
  ctx.moveTo(toPx(0), toPx(-extent));
  ctx.lineTo(toPx(0), toPx(extent));
  ctx.stroke();

  for (const c of obj.components ?? []) {
    const [x = 0, y = 0, z = 0] = c.mean;
    const hue = 210 + 40 * Math.tanh(z / 2);
    const alpha = Math.min(0.85, 0.25 + 0.2 * c.amplitude);
    ctx.fillStyle = `hsla(${hue}, 70%, 50%, ${alpha})`;
    ctx.beginPath();
    ctx.arc(toPx(x), toPx(-y), (c.sigma / (2 * extent)) * canvas.width, 0, 2 * Math.PI);
    ctx.fill();
  }
}

$("object-form").addEventListener("submit", (event) => {
  event.preventDefault();
  try {
    const json = generate_object(
      Number($("obj-n").value),
      Number($("obj-k").value),
      Number($("obj-seed").value),
    );
    $("object-json").value = json;
    drawObject(json);
    setStatus("object-status", "");
  } catch (err) {
    setStatus("object-status", String(err), true);
  }
});

$("object-json").addEventListener("input", () => drawObject($("object-json").value));

// -------------------------------------------------------------- recovery --

$("recover-form").addEventListener("submit", (event) => {
  event.preventDefault();
  setStatus("recover-status", "sampling…");
  // Let the status paint before the synchronous wasm call blocks.
  setTimeout(() => {
    try {
      const report = JSON.parse(
        recover_moment(
          $("object-json").value,
          $("query").value,
          Number($("rec-m").value),
          Number($("rec-samples").value),
          Number($("rec-seed").value),
        ),
      );
      const r = report.recovered;
      const ref = report.reference;
      $("recover-result").innerHTML = `
        <table>
          <tr><th></th><th>real</th><th>imag</th><th>std error</th></tr>
          <tr><td>recovered</td><td>${fmt(r.value_re)}</td><td>${fmt(r.value_im)}</td><td>${fmt(r.std_error)}</td></tr>
          ${ref ? `<tr><td>reference</td><td>${fmt(ref.value_re)}</td><td>${fmt(ref.value_im)}</td><td>–</td></tr>` : ""}
        </table>`;
      setStatus(
        "recover-status",
        report.residual === null || report.residual === undefined
          ? `recovered through a ${report.frame.m}-dimensional slice (no reference in this dimension)`
          : `relative residual vs quadrature: ${fmt(report.residual)}`,
      );
    } catch (err) {
      $("recover-result").innerHTML = "";
      setStatus("recover-status", String(err), true);
    }
  }, 20);
});

// ------------------------------------------------------------- reweight --

$("reweight-form").addEventListener("submit", (event) => {
  event.preventDefault();
  setStatus("reweight-status", "sampling…");
  setTimeout(() => {
    try {
      const report = JSON.parse(
        reweight_compare(
          $("object-json").value,
          Number($("rw-kappa").value),
          Number($("rw-samples").value),
          Number($("rw-seed").value),
        ),
      );
      const rows = [
        ["uniform views", report.haar, ""],
        ["tilted, uncorrected", report.tilted_unweighted, "biased"],
        ["tilted, reweighted", report.tilted_reweighted, "good"],
      ];
      const sigma = (est) => {
        const combined = Math.hypot(est.std_error, report.haar.std_error);
        const dev = Math.max(
          Math.abs(est.value_re - report.haar.value_re),
          Math.abs(est.value_im - report.haar.value_im),
        );
        return dev === 0 ? 0 : dev / combined;
      };
      $("reweight-result").innerHTML = `
        <table>
          <tr><th>estimate</th><th>real</th><th>imag</th><th>std error</th><th>deviation</th></tr>
          ${rows
            .map(([label, est, cls]) => {
              const s = sigma(est);
              const mark = label === "uniform views" ? "–" : `${fmt(s, 1)}σ`;
              const hot = cls === "biased" && s > 5 ? "biased" : cls === "good" && s <= 5 ? "good" : "";
              return `<tr><td>${label}</td><td>${fmt(est.value_re)}</td><td>${fmt(est.value_im)}</td><td>${fmt(est.std_error)}</td><td class="${hot}">${mark}</td></tr>`;
            })
            .join("")}
        </table>`;
      setStatus("reweight-status", `tuple ${JSON.stringify(report.query)} seen through the slice`);
    } catch (err) {
      $("reweight-result").innerHTML = "";
      setStatus("reweight-status", String(err), true);
    }
  }, 20);
});

// Boot with a default object so every button works immediately.
$("object-form").requestSubmit();
