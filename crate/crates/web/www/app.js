import init, { detect, repair, corrupt } from "./pkg/strfix_web.js";

const SAMPLE = `Name,Category,Player ID
Arjun Mehta,Professional,IND-674-PRO
Liam Carter,Junior,US-120-JUN
Oliver Hughes,Professional,UK-332-PRO
Hugo Martin,Junior,FRA-101-JUN
Noah Tremblay,Professional,CAN-550-PRO
Felix Braun,Junior,GER-871-JUN
Ethan Brooks,Professional,US-412-PRO
Ravi Kumar,Junior,IND-233-JUN
Lucas Petit,Professional,FRA-905-PRO
Jack Wilson,Junior,UK-748-JUN
Mason Reed,Professional,usa_837
Leon Wagner,Junior,GER-215-JUN
Emma Roy,Professional,CAN-660-PRO
Sofia Rossi,Junior,UK-519-JUN
`;

const $ = (id) => document.getElementById(id);

function options() {
  return JSON.stringify({
    delta: Number($("delta").value),
    k: Number($("k").value),
    no_semantics: $("nosem").checked,
  });
}

function parseCsv(text) {
  // Enough for display: quoted fields with doubled quotes, no embedded newlines.
  return text.trim().split("\n").map((line) => {
    const out = [];
    let cur = "", quoted = false;
    for (let i = 0; i < line.length; i++) {
      const c = line[i];
      if (quoted) {
        if (c === '"' && line[i + 1] === '"') { cur += '"'; i++; }
        else if (c === '"') quoted = false;
        else cur += c;
      } else if (c === '"') quoted = true;
      else if (c === ",") { out.push(cur); cur = ""; }
      else cur += c;
    }
    out.push(cur);
    return out;
  });
}

function el(tag, text, cls) {
  const e = document.createElement(tag);
  if (text !== undefined) e.textContent = text;
  if (cls) e.className = cls;
  return e;
}

// marks: Map "col:row" -> { cls, title }
function renderTable(csv, marks) {
  const rows = parseCsv(csv);
  const table = el("table");
  const head = el("tr");
  rows[0].forEach((h) => head.appendChild(el("th", h)));
  table.appendChild(head);
  rows.slice(1).forEach((r, ri) => {
    const tr = el("tr");
    r.forEach((v, ci) => {
      const m = marks.get(`${ci}:${ri}`);
      const td = el("td", v, m && m.cls);
      if (m) td.title = m.title;
      tr.appendChild(td);
    });
    table.appendChild(tr);
  });
  return table;
}

function patternList(report) {
  const ul = el("ul");
  for (const c of report.columns) {
    const sig = c.patterns.filter((p) => p.significant).map((p) => p.pattern).join("  |  ") || "(none)";
    ul.appendChild(el("li", `${c.column}: ${c.detections.length} flagged, significant ${sig}`));
  }
  return ul;
}

function show(nodes, raw) {
  $("status").textContent = "";
  const result = $("result");
  result.replaceChildren(...nodes);
  $("raw").textContent = raw;
}

function run(fn) {
  try {
    fn();
  } catch (e) {
    $("status").textContent = String(e);
  }
}

function onDetect() {
  const raw = detect($("csv").value, options());
  const report = JSON.parse(raw);
  const marks = new Map();
  for (const c of report.columns) {
    for (const d of c.detections) marks.set(`${c.column_index}:${d.row}`, { cls: "flag", title: "flagged" });
  }
  show([patternList(report), renderTable($("csv").value, marks)], raw);
}

function onRepair() {
  const raw = repair($("csv").value, options());
  const out = JSON.parse(raw);
  const marks = new Map();
  for (const c of out.report.columns) {
    for (const d of c.detections) marks.set(`${c.column_index}:${d.row}`, { cls: "flag", title: "no repair" });
    for (const r of c.repairs) {
      marks.set(`${c.column_index}:${r.row}`, { cls: "fix", title: `was ${r.original}` });
    }
  }
  const note = el("p", "Repaired cells are green (hover for the original); red cells had no repair.");
  show([patternList(out.report), note, renderTable(out.repaired_csv, marks)], raw);
  $("csv").value = out.repaired_csv;
}

function onCorrupt() {
  const raw = corrupt($("csv").value, Number($("seed").value), Number($("rate").value));
  const out = JSON.parse(raw);
  const header = parseCsv(out.csv)[0];
  const marks = new Map();
  for (const e of out.entries) {
    marks.set(`${header.indexOf(e.column)}:${e.row}`, { cls: "flag", title: `${e.original} (${e.ops.join(", ")})` });
  }
  $("csv").value = out.csv;
  show([el("p", `${out.entries.length} cells corrupted.`), renderTable(out.csv, marks)], raw);
}

await init();
$("csv").value = SAMPLE;
$("detect").onclick = () => run(onDetect);
$("repair").onclick = () => run(onRepair);
$("corrupt").onclick = () => run(onCorrupt);
$("reset").onclick = () => { $("csv").value = SAMPLE; show([], ""); };
