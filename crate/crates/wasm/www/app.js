import init, * as accord from "../pkg/accord_wasm.js";

function call(fn, ...args) {
  const doc = JSON.parse(fn(...args));
  if (!doc.ok) throw new Error(doc.error);
  return doc.value;
}

function el(id) { return document.getElementById(id); }

function esc(text) {
  const span = document.createElement("span");
  span.textContent = String(text);
  return span.innerHTML;
}

function showError(target, err) {
  target.innerHTML = `<p class="error">${esc(err.message || err)}</p>`;
}

function valuationText(v) { return `(${v.join(", ")})`; }

/* ---------- tabs ---------- */

for (const button of document.querySelectorAll("nav button")) {
  button.addEventListener("click", () => {
    document.querySelectorAll("nav button").forEach(b => b.classList.remove("active"));
    document.querySelectorAll("section.panel").forEach(p => p.classList.remove("active"));
    button.classList.add("active");
    el(`panel-${button.dataset.panel}`).classList.add("active");
  });
}

/* ---------- reflective link ---------- */

function barClass(pair) {
  if (pair === "COMMIT/COMMIT") return "hist-bar";
  if (pair === "COMMIT/ABORT" || pair === "ABORT/COMMIT") return "hist-bar divergent";
  return "hist-bar undecided";
}

function runSweep() {
  const target = el("link-hist");
  try {
    const loss = Number(el("link-loss").value);
    const attempts = Number(el("link-attempts").value);
    const seeds = Number(el("link-seeds").value);
    const sweep = call(accord.link_sweep, loss, attempts, BigInt(seeds));
    const rows = Object.entries(sweep.outcomes)
      .sort((a, b) => b[1] - a[1])
      .map(([pair, count]) => {
        const width = (100 * count / sweep.runs).toFixed(2);
        return `<div class="hist-row">
          <span>${esc(pair)}</span>
          <div><div class="${barClass(pair)}" style="width:${width}%"></div></div>
          <span class="muted">${count}</span>
        </div>`;
      })
      .join("");
    target.innerHTML = rows;
    const safe = sweep.divergences === 0;
    el("link-safety").innerHTML = `
      <p><span class="badge ${safe ? "pass" : "fail"}">${safe ? "agreement safe" : "DIVERGENCE"}</span>
      <span class="muted"> ${sweep.bilateral_commits} bilateral commits,
      ${sweep.divergences} commit/abort divergences over ${sweep.runs} runs</span></p>`;
  } catch (err) {
    showError(target, err);
    el("link-safety").innerHTML = "";
  }
}

function describeEndpoint(name, state) {
  const phase = state.phase.phase === "Decided" ? state.phase.decision : state.phase.phase.toUpperCase();
  const tokens = state.evidence.length ? state.evidence.join(", ") : "none";
  return `<div class="endpoint">
    <div>${esc(name)} — <span class="phase ${esc(phase)}">${esc(phase)}</span></div>
    <div class="muted">evidence: ${esc(tokens)}</div>
    <div class="muted">send attempts: ${state.attempts}</div>
  </div>`;
}

function runOne() {
  const target = el("link-transcript");
  try {
    const loss = Number(el("link-loss").value);
    const attempts = Number(el("link-attempts").value);
    const seed = Number(el("link-seed").value);
    const run = call(accord.link_run, loss, attempts, BigInt(seed));
    const direction = { proposal: "A → B", reflect: "B → A", confirm: "A → B" };
    const legs = run.transcript.map(e => `
      <div class="leg">
        <span>${esc(e.leg)} #${e.attempt}</span>
        <span>${esc(direction[e.leg] || "")}</span>
        <span class="${e.delivered ? "ok" : "lost"}">${e.delivered ? "delivered" : "lost"}</span>
      </div>`).join("");
    target.innerHTML = `
      <div class="legs">${legs || '<p class="muted">no channel events</p>'}</div>
      <div class="endpoints">
        ${describeEndpoint("endpoint A (initiator)", run.terminal_a)}
        ${describeEndpoint("endpoint B (responder)", run.terminal_b)}
      </div>`;
  } catch (err) {
    showError(target, err);
  }
}

el("link-loss").addEventListener("input", () => {
  el("link-loss-view").textContent = Number(el("link-loss").value).toFixed(2);
});
el("link-go").addEventListener("click", runSweep);
el("link-one").addEventListener("click", runOne);

/* ---------- equivalence ---------- */

let corpus = [];

function fillScenarioSelects() {
  corpus = call(accord.corpus_list);
  for (const id of ["equiv-scenario", "trace-scenario"]) {
    el(id).innerHTML = corpus
      .map(s => `<option value="${esc(s.name)}">${esc(s.name)}</option>`)
      .join("");
  }
}

function runEquivalence() {
  const target = el("equiv-result");
  try {
    const name = el("equiv-scenario").value;
    const scenario = call(accord.scenario_json, name);
    const report = call(accord.check_equivalence, JSON.stringify(scenario));
    const column = (title, vs) => `
      <div>
        <h3>${esc(title)} — ${vs.length}</h3>
        <ul>${vs.map(v => `<li>${esc(valuationText(v))}</li>`).join("") || '<li class="muted">(empty)</li>'}</ul>
      </div>`;
    target.innerHTML = `
      <p><span class="badge ${report.pass ? "pass" : "fail"}">${report.pass ? "PASS" : "FAIL"}</span>
      <span class="muted"> the three sets below were computed independently</span></p>
      <div class="cols">
        ${column("simulated outcomes", report.simulated)}
        ${column("CSP solutions", report.csp_solutions)}
        ${column("realized outcomes", report.realized)}
      </div>`;
  } catch (err) {
    showError(target, err);
  }
}

el("equiv-scenario").addEventListener("change", () => {
  const entry = corpus.find(s => s.name === el("equiv-scenario").value);
  el("equiv-note").textContent = entry ? entry.note : "";
});
el("equiv-go").addEventListener("click", runEquivalence);

/* ---------- trace order ---------- */

function rebuildChoiceInputs() {
  const target = el("trace-choices");
  try {
    const scenario = call(accord.scenario_json, el("trace-scenario").value);
    target.innerHTML = scenario.choice_points.map((cp, i) => `
      <div>
        <label>p${cp.process} chooses</label>
        <select class="trace-choice" data-index="${i}">
          ${scenario.domains[cp.process].map(v => `<option>${esc(v)}</option>`).join("")}
        </select>
      </div>`).join("");
  } catch (err) {
    target.innerHTML = "";
  }
}

function drawTrace(view) {
  const lanes = view.trace.commitments.length;
  const maxClock = Math.max(1, ...view.events.map(e => e.clock));
  const laneWidth = 170, rowHeight = 64, left = 90, top = 52;
  const width = left + lanes * laneWidth;
  const height = top + maxClock * rowHeight;
  const position = {};
  for (const e of view.events) {
    position[e.id] = {
      x: left + e.process * laneWidth + laneWidth / 2,
      y: top + (e.clock - 0.5) * rowHeight,
    };
  }
  const laneLabels = Array.from({ length: lanes }, (_, p) =>
    `<text class="lane-label" x="${left + p * laneWidth + laneWidth / 2}" y="24" text-anchor="middle">p${p}</text>`
  ).join("");
  const clockLabels = Array.from({ length: maxClock }, (_, c) =>
    `<text class="clock-label" x="14" y="${top + (c + 0.5) * rowHeight + 4}">t=${c + 1}</text>`
  ).join("");
  const guides = Array.from({ length: maxClock }, (_, c) =>
    `<line x1="8" y1="${top + (c + 1) * rowHeight}" x2="${width - 8}" y2="${top + (c + 1) * rowHeight}"
      stroke="#2b3442" stroke-dasharray="3 5"/>`
  ).join("");
  const edges = view.covering_edges.map(([a, b]) => {
    const p = position[a], q = position[b];
    return `<line x1="${p.x}" y1="${p.y + 14}" x2="${q.x}" y2="${q.y - 16}"
      stroke="#58a6ff" stroke-width="1.4" marker-end="url(#arrow)"/>`;
  }).join("");
  const nodes = view.events.map(e => {
    const p = position[e.id];
    const commit = e.label.startsWith("commit");
    return `
      <circle cx="${p.x}" cy="${p.y}" r="11" fill="${commit ? "#1f6feb" : "#9e6a03"}"/>
      <text x="${p.x}" y="${p.y - 18}" text-anchor="middle">${esc(e.id)}</text>
      <text x="${p.x}" y="${p.y + 30}" text-anchor="middle" class="clock-label">${esc(e.label)}</text>`;
  }).join("");
  return `
    <svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">
      <defs>
        <marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="7" markerHeight="7" orient="auto-start-reverse">
          <path d="M 0 0 L 10 5 L 0 10 z" fill="#58a6ff"/>
        </marker>
      </defs>
      ${guides}${laneLabels}${clockLabels}${edges}${nodes}
    </svg>`;
}

function runTrace() {
  const target = el("trace-result");
  try {
    const scenario = call(accord.scenario_json, el("trace-scenario").value);
    const seed = Number(el("trace-seed").value);
    const choices = Array.from(document.querySelectorAll(".trace-choice"))
      .map(select => select.value)
      .join(",");
    const view = call(accord.simulate, JSON.stringify(scenario), BigInt(seed), choices);
    const extensions = view.linear_extensions === null
      ? "skipped (too many events)"
      : view.linear_extensions;
    target.innerHTML = `
      ${drawTrace(view)}
      <table class="stats">
        <tr><td>final valuation</td><td>${esc(valuationText(view.final_valuation))}</td></tr>
        <tr><td>accepted</td><td>${view.accepted}</td></tr>
        <tr><td>events</td><td>${view.events.length}</td></tr>
        <tr><td>concurrent pairs</td><td>${view.concurrent_pairs}</td></tr>
        <tr><td>linear extensions</td><td>${esc(extensions)}</td></tr>
        <tr><td>observations</td><td>${view.trace.observations.length}</td></tr>
      </table>`;
  } catch (err) {
    showError(target, err);
  }
}

el("trace-scenario").addEventListener("change", rebuildChoiceInputs);
el("trace-go").addEventListener("click", runTrace);

/* ---------- boot ---------- */

await init();
fillScenarioSelects();
el("equiv-scenario").dispatchEvent(new Event("change"));
rebuildChoiceInputs();
runSweep();
runOne();
runEquivalence();
runTrace();
