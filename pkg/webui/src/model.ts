// Pure view-state model: everything displayed derives from the latest
// server snapshot plus client-only layout and selection.

import type { GraphJson, OpResponse, Snapshot } from './api.js'

export interface HistoryItem {
  label: string
  stateHash: string
}

export interface ChoiceDialog {
  options: number[][]
  previews: { option: number[]; edges: number[][] }[] | null
}

export interface ViewState {
  sessionId: string | null
  snapshot: Snapshot | null
  selection: number[]
  dialog: ChoiceDialog | null
  history: HistoryItem[]
}

export function emptyView(): ViewState {
  return { sessionId: null, snapshot: null, selection: [], dialog: null, history: [] }
}

export function applyResponse(view: ViewState, label: string, resp: OpResponse): ViewState {
  const nodes = new Set(resp.snapshot.graph ? resp.snapshot.graph.nodes : [])
  const dialog: ChoiceDialog | null =
    resp.status === 'needs_choice' && resp.choices
      ? { options: resp.choices.map((o) => [...o]), previews: null }
      : null
  const history =
    resp.snapshot.history_length > view.history.length
      ? [...view.history, { label, stateHash: resp.snapshot.state_hash }]
      : view.history.slice(0, resp.snapshot.history_length)
  return {
    sessionId: view.sessionId,
    snapshot: resp.snapshot,
    selection: view.selection.filter((q) => nodes.has(q)),
    dialog,
    history,
  }
}

export function toggleSelection(view: ViewState, node: number): ViewState {
  const selection = view.selection.includes(node)
    ? view.selection.filter((q) => q !== node)
    : [...view.selection, node]
  return { ...view, selection }
}

// Palette availability mirrors the op arities: single-qubit ops need one
// selected node, pair ops exactly two, n-fusion two or more. Disabled
// actions never reach the server.
export interface Palette {
  measure: boolean
  lc: boolean
  fuse: boolean
  cnot: boolean
  nfuse: boolean
  undo: boolean
}

export function paletteFor(view: ViewState): Palette {
  const k = view.selection.length
  const live = view.snapshot !== null && view.dialog === null
  return {
    measure: live && k === 1,
    lc: live && k === 1,
    fuse: live && k === 2,
    cnot: live && k === 2,
    nfuse: live && k >= 2,
    undo: view.snapshot !== null && view.snapshot.history_length > 0,
  }
}

// Generator strings are shown exactly as the service provides them.
export function generatorLines(snapshot: Snapshot | null): string[] {
  if (!snapshot || !snapshot.generators) return []
  return [
    ...snapshot.generators.stab.map((s) => `stab   ${s}`),
    ...snapshot.generators.destab.map((s) => `destab ${s}`),
  ]
}

export function sortedEdges(graph: GraphJson | null): number[][] {
  if (!graph) return []
  return graph.edges.map((e) => [...e])
}
