import { describe, expect, it } from 'vitest'

import type { OpResponse, Snapshot } from '../src/api.js'
import {
  applyResponse,
  emptyView,
  generatorLines,
  paletteFor,
  toggleSelection,
} from '../src/model.js'
import type { ViewState } from '../src/model.js'
import { updateLayout } from '../src/layout.js'

function snap(partial: Partial<Snapshot>): Snapshot {
  return {
    session: 's',
    seed: 0,
    n: 3,
    retired: [],
    graph: { n: 3, nodes: [1, 2, 3], edges: [[1, 2], [2, 3]], self_loops: [], phase_tags: {}, ledger: [] },
    hadamard_options: null,
    generators: { n: 3, destab: ['+ZII'], stab: ['+XZI'] },
    history_length: 1,
    pending: null,
    state_hash: 'abc',
    ...partial,
  }
}

function ok(s: Snapshot): OpResponse {
  return { status: 'ok', snapshot: s }
}

describe('view state', () => {
  it('tracks history labels against server history length', () => {
    let view: ViewState = { ...emptyView(), sessionId: 's' }
    view = applyResponse(view, 'new-cluster', ok(snap({ history_length: 1 })))
    view = applyResponse(view, 'measure Z 2', ok(snap({ history_length: 2 })))
    expect(view.history.map((h) => h.label)).toEqual(['new-cluster', 'measure Z 2'])
    // undo shrinks server history; local labels truncate to match
    view = applyResponse(view, 'undo', ok(snap({ history_length: 1 })))
    expect(view.history.map((h) => h.label)).toEqual(['new-cluster'])
  })

  it('prunes selection to nodes that still exist', () => {
    let view: ViewState = { ...emptyView(), sessionId: 's' }
    view = applyResponse(view, 'new', ok(snap({})))
    view = toggleSelection(view, 2)
    view = toggleSelection(view, 3)
    const after = snap({})
    after.graph = { ...after.graph!, nodes: [1, 3], edges: [] }
    view = applyResponse(view, 'measure', ok(after))
    expect(view.selection).toEqual([3])
  })

  it('builds a dialog from needs_choice responses', () => {
    let view: ViewState = { ...emptyView(), sessionId: 's' }
    const resp: OpResponse = {
      status: 'needs_choice',
      choices: [[2], [3]],
      snapshot: snap({ pending: { kind: 'hadamards', options: [[2], [3]] } }),
    }
    view = applyResponse(view, 'measure X 1', resp)
    expect(view.dialog).not.toBeNull()
    expect(view.dialog!.options).toEqual([[2], [3]])
  })

  it('disables pair actions unless exactly two nodes are selected', () => {
    let view: ViewState = { ...emptyView(), sessionId: 's' }
    view = applyResponse(view, 'new', ok(snap({})))
    expect(paletteFor(view).fuse).toBe(false) // empty selection: no request
    view = toggleSelection(view, 1)
    expect(paletteFor(view).measure).toBe(true)
    expect(paletteFor(view).fuse).toBe(false)
    view = toggleSelection(view, 2)
    expect(paletteFor(view).fuse).toBe(true)
    expect(paletteFor(view).measure).toBe(false)
  })

  it('shows generator strings verbatim', () => {
    const lines = generatorLines(snap({}))
    expect(lines).toEqual(['stab   +XZI', 'destab +ZII'])
  })
})

describe('layout', () => {
  const graph = {
    n: 4,
    nodes: [1, 2, 3, 4],
    edges: [[1, 2], [2, 3], [3, 4]],
    self_loops: [],
    phase_tags: {},
    ledger: [],
  }

  it('is deterministic for a fresh graph', () => {
    const a = updateLayout(new Map(), graph, 800, 600)
    const b = updateLayout(new Map(), graph, 800, 600)
    expect([...a.entries()]).toEqual([...b.entries()])
  })

  it('keeps surviving nodes fixed under small diffs', () => {
    const first = updateLayout(new Map(), graph, 800, 600)
    const smaller = { ...graph, nodes: [1, 2, 4], edges: [[1, 2]] }
    const second = updateLayout(first, smaller, 800, 600)
    for (const node of [1, 2, 4]) {
      expect(second.get(node)).toEqual(first.get(node))
    }
    expect(second.has(3)).toBe(false)
  })

  it('places new nodes near their neighbors', () => {
    const first = updateLayout(new Map(), graph, 800, 600)
    const grown = { ...graph, nodes: [1, 2, 3, 4, 5], edges: [...graph.edges, [4, 5]] }
    const second = updateLayout(first, grown, 800, 600)
    const p4 = second.get(4)!
    const p5 = second.get(5)!
    expect(Math.hypot(p4.x - p5.x, p4.y - p5.y)).toBeLessThan(120)
  })
})
