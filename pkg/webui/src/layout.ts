// Client-only force-directed layout. Positions are deterministic (node
// ids seed their start angle) and stable under small graph diffs:
// surviving nodes keep their coordinates, new nodes enter near the
// centroid of their neighbors, and refinement only runs on first
// placement.

import type { GraphJson } from './api.js'

export interface Point {
  x: number
  y: number
}

export type Layout = Map<number, Point>

function seededPoint(node: number, width: number, height: number): Point {
  // golden-angle spiral keyed by the node id
  const angle = node * 2.399963229728653
  const radius = 0.12 + 0.3 * ((node * 0.6180339887498949) % 1)
  return {
    x: width / 2 + Math.cos(angle) * radius * width,
    y: height / 2 + Math.sin(angle) * radius * height,
  }
}

function refine(points: Layout, graph: GraphJson, width: number, height: number, rounds: number): void {
  const nodes = graph.nodes
  const edges = graph.edges
  const spring = Math.min(width, height) / Math.max(2.5, Math.sqrt(nodes.length) + 1)
  for (let round = 0; round < rounds; round++) {
    const force = new Map<number, Point>(nodes.map((n) => [n, { x: 0, y: 0 }]))
    for (let i = 0; i < nodes.length; i++) {
      for (let j = i + 1; j < nodes.length; j++) {
        const a = points.get(nodes[i])!
        const b = points.get(nodes[j])!
        const dx = a.x - b.x
        const dy = a.y - b.y
        const d2 = Math.max(dx * dx + dy * dy, 1)
        const push = (spring * spring) / d2
        const fa = force.get(nodes[i])!
        const fb = force.get(nodes[j])!
        fa.x += dx * push * 0.02
        fa.y += dy * push * 0.02
        fb.x -= dx * push * 0.02
        fb.y -= dy * push * 0.02
      }
    }
    for (const [u, v] of edges) {
      const a = points.get(u)!
      const b = points.get(v)!
      const dx = b.x - a.x
      const dy = b.y - a.y
      const dist = Math.max(Math.hypot(dx, dy), 1)
      const pull = ((dist - spring) / dist) * 0.05
      const fa = force.get(u)!
      const fb = force.get(v)!
      fa.x += dx * pull
      fa.y += dy * pull
      fb.x -= dx * pull
      fb.y -= dy * pull
    }
    for (const n of nodes) {
      const p = points.get(n)!
      const f = force.get(n)!
      p.x = Math.min(width - 24, Math.max(24, p.x + f.x))
      p.y = Math.min(height - 24, Math.max(24, p.y + f.y))
    }
  }
}

export function updateLayout(
  previous: Layout,
  graph: GraphJson | null,
  width: number,
  height: number,
): Layout {
  const next: Layout = new Map()
  if (!graph) return next
  const fresh: number[] = []
  for (const node of graph.nodes) {
    const kept = previous.get(node)
    if (kept) {
      next.set(node, { x: kept.x, y: kept.y })
    } else {
      fresh.push(node)
    }
  }
  for (const node of fresh) {
    const neighbors = graph.edges
      .filter((e) => e.includes(node))
      .map((e) => (e[0] === node ? e[1] : e[0]))
      .filter((n) => next.has(n))
    if (neighbors.length > 0) {
      const cx = neighbors.reduce((acc, n) => acc + next.get(n)!.x, 0) / neighbors.length
      const cy = neighbors.reduce((acc, n) => acc + next.get(n)!.y, 0) / neighbors.length
      const jitter = seededPoint(node, 60, 60)
      next.set(node, { x: cx + jitter.x - 30, y: cy + jitter.y - 30 })
    } else {
      next.set(node, seededPoint(node, width, height))
    }
  }
  if (previous.size === 0 && graph.nodes.length > 0) {
    refine(next, graph, width, height, 120)
  }
  return next
}
