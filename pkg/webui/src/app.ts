// DOM wiring: canvas rendering, op palette, choice dialog, history.

import { previewChoices, SessionApi, ApiError } from './api.js'
import type { OpResponse, Snapshot } from './api.js'
import {
  applyResponse,
  emptyView,
  generatorLines,
  paletteFor,
  toggleSelection,
  ViewState,
} from './model.js'
import { Layout, updateLayout } from './layout.js'

const api = new SessionApi('')
let view: ViewState = emptyView()
let layout: Layout = new Map()

const canvas = document.getElementById('graph') as HTMLCanvasElement
const ctx = canvas.getContext('2d')!

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T
}

function render(): void {
  const snap = view.snapshot
  ctx.clearRect(0, 0, canvas.width, canvas.height)
  if (snap && snap.graph) {
    layout = updateLayout(layout, snap.graph, canvas.width, canvas.height)
    ctx.strokeStyle = '#888'
    for (const [u, v] of snap.graph.edges) {
      const a = layout.get(u)!
      const b = layout.get(v)!
      ctx.beginPath()
      ctx.moveTo(a.x, a.y)
      ctx.lineTo(b.x, b.y)
      ctx.stroke()
    }
    for (const node of snap.graph.nodes) {
      const p = layout.get(node)!
      const selected = view.selection.includes(node)
      const tagged = snap.graph.self_loops.includes(node)
      ctx.beginPath()
      ctx.arc(p.x, p.y, 14, 0, Math.PI * 2)
      ctx.fillStyle = selected ? '#ffd166' : tagged ? '#b5e48c' : '#cfe2ff'
      ctx.fill()
      ctx.stroke()
      ctx.fillStyle = '#222'
      ctx.textAlign = 'center'
      ctx.textBaseline = 'middle'
      ctx.fillText(String(node), p.x, p.y)
    }
  }
  el<HTMLDivElement>('generators').textContent = generatorLines(snap).join('\n')
  el<HTMLDivElement>('history').innerHTML = view.history
    .map((h, i) => `<div class="h-item">${i + 1}. ${h.label}</div>`)
    .join('')
  const palette = paletteFor(view)
  for (const [id, enabled] of Object.entries({
    'btn-mx': palette.measure,
    'btn-my': palette.measure,
    'btn-mz': palette.measure,
    'btn-lc': palette.lc,
    'btn-fuse': palette.fuse,
    'btn-cnot': palette.cnot,
    'btn-nfuse': palette.nfuse,
    'btn-undo': palette.undo,
  })) {
    el<HTMLButtonElement>(id).disabled = !enabled
  }
  renderDialog()
  void refreshJsonPanel()
}

async function refreshJsonPanel(): Promise<void> {
  if (!view.sessionId || !view.snapshot || view.snapshot.pending) {
    return
  }
  // displayed verbatim: the exact export text, byte-identical to the CLI
  const text = await api.exportText(view.sessionId, 'json')
  el<HTMLPreElement>('graph-json').textContent = text
}

function renderDialog(): void {
  const box = el<HTMLDivElement>('dialog')
  if (!view.dialog) {
    box.style.display = 'none'
    box.innerHTML = ''
    return
  }
  box.style.display = 'block'
  const options = view.dialog.options
  box.innerHTML =
    '<p>Pick the Hadamard combination:</p>' +
    options
      .map(
        (o, i) =>
          `<button class="choice" data-index="${i}">H on {${o.join(', ')}}</button>`,
      )
      .join('') +
    '<button id="preview-all">show all outcomes</button>' +
    '<div id="previews"></div>'
  box.querySelectorAll<HTMLButtonElement>('button.choice').forEach((btn) => {
    btn.onclick = () => void commitChoice(options[Number(btn.dataset.index)])
  })
  el<HTMLButtonElement>('preview-all').onclick = () => void showPreviews()
}

async function commitChoice(option: number[]): Promise<void> {
  if (!view.sessionId) return
  const resp = await api.choice(view.sessionId, option)
  view = applyResponse(view, `choice H{${option.join(',')}}`, resp)
  render()
}

async function showPreviews(): Promise<void> {
  if (!view.sessionId || !view.dialog) return
  const previews = await previewChoices(api, view.sessionId, view.dialog.options)
  el<HTMLDivElement>('previews').innerHTML = previews
    .map(
      (p) =>
        `<div class="preview">H{${p.option.join(',')}} &rarr; edges ${JSON.stringify(
          p.graph ? p.graph.edges : [],
        )}</div>`,
    )
    .join('')
}

async function runOp(label: string, op: string, args: Record<string, unknown>): Promise<void> {
  if (!view.sessionId) return
  try {
    const resp: OpResponse = await api.op(view.sessionId, op, args)
    view = applyResponse(view, label, resp)
  } catch (err) {
    if (err instanceof ApiError) {
      el<HTMLDivElement>('status').textContent = `error: ${err.message}`
      return
    }
    throw err
  }
  el<HTMLDivElement>('status').textContent = ''
  render()
}

function selectedPair(): [number, number] {
  const [a, b] = view.selection
  return [a, b]
}

interface KrausReportEntry {
  classification: string
  logical_output: boolean
  matrix: number[][][]
}

async function showKraus(builder: string): Promise<void> {
  const res = await fetch('/api/lo/kraus', {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({ builder }),
  })
  const report = (await res.json()) as Record<string, KrausReportEntry>
  const rows = Object.entries(report)
    .map(([label, entry]) => {
      const cells = entry.matrix
        .map((row) =>
          row
            .map(([re, im]) => {
              if (Math.abs(im) < 1e-12) return re.toFixed(3)
              return `${re.toFixed(3)}${im >= 0 ? '+' : ''}${im.toFixed(3)}i`
            })
            .join(', '),
        )
        .join(' | ')
      return `<tr><td>${label}</td><td>${entry.classification}</td><td>${cells}</td></tr>`
    })
    .join('')
  el<HTMLDivElement>('kraus-panel').innerHTML =
    `<table><tr><th>pattern</th><th>class</th><th>matrix rows</th></tr>${rows}</table>`
}

function wirePalette(): void {
  el<HTMLButtonElement>('btn-kraus').onclick = () =>
    void showKraus(el<HTMLSelectElement>('kraus-builder').value)
  el<HTMLButtonElement>('btn-new').onclick = async () => {
    const edges = el<HTMLInputElement>('edges-input').value
      .split(',')
      .filter((s) => s.includes('-'))
      .map((s) => s.split('-').map(Number))
    const created = await api.newSession(Number(el<HTMLInputElement>('seed-input').value || 0))
    view = { ...emptyView(), sessionId: created.id }
    await runOp(`new-cluster ${edges.length} edges`, 'new_cluster', { edges })
  }
  const measure = (basis: string) => () =>
    void runOp(`measure ${basis} ${view.selection[0]}`, 'measure', {
      qubit: view.selection[0],
      basis,
    })
  el<HTMLButtonElement>('btn-mx').onclick = measure('X')
  el<HTMLButtonElement>('btn-my').onclick = measure('Y')
  el<HTMLButtonElement>('btn-mz').onclick = measure('Z')
  el<HTMLButtonElement>('btn-lc').onclick = () =>
    void runOp(`lc ${view.selection[0]}`, 'lc', { qubit: view.selection[0] })
  el<HTMLButtonElement>('btn-cnot').onclick = () => {
    const [c, t] = selectedPair()
    void runOp(`cnot ${c}->${t}`, 'apply', { gate: 'CNOT', qubits: [c, t] })
  }
  el<HTMLButtonElement>('btn-fuse').onclick = () => {
    const [c, t] = selectedPair()
    const fusionType = Number(el<HTMLSelectElement>('fuse-type').value)
    const branch = el<HTMLInputElement>('fuse-fail').checked ? 'failure' : 'success'
    void runOp(`fuse t${fusionType} ${branch} (${c},${t})`, 'fuse', {
      type: fusionType,
      control: c,
      target: t,
      branch,
    })
  }
  el<HTMLButtonElement>('btn-nfuse').onclick = () => {
    const branch = el<HTMLInputElement>('fuse-fail').checked ? 'failure' : 'success'
    void runOp(`nfuse {${view.selection.join(',')}}`, 'nfuse', {
      qubits: [...view.selection],
      branch,
    })
  }
  el<HTMLButtonElement>('btn-undo').onclick = async () => {
    if (!view.sessionId) return
    const resp = await api.undo(view.sessionId)
    view = applyResponse(view, 'undo', resp)
    render()
  }
  canvas.onclick = (event) => {
    if (!view.snapshot || !view.snapshot.graph) return
    const rect = canvas.getBoundingClientRect()
    const x = event.clientX - rect.left
    const y = event.clientY - rect.top
    for (const node of view.snapshot.graph.nodes) {
      const p = layout.get(node)
      if (p && Math.hypot(p.x - x, p.y - y) < 16) {
        view = toggleSelection(view, node)
        render()
        return
      }
    }
  }
}

wirePalette()
render()
