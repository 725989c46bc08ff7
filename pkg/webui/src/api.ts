// Typed client for the stabsim session service. The UI talks to the
// engine exclusively through this protocol; no stabilizer math happens
// client-side.

export interface GraphJson {
  n: number
  nodes: number[]
  edges: number[][]
  self_loops: number[]
  phase_tags: Record<string, number>
  ledger: { op: string; target: number; [key: string]: unknown }[]
}

export interface Generators {
  n: number
  destab: string[]
  stab: string[]
}

export interface PendingChoice {
  kind: string
  options: number[][]
}

export interface Snapshot {
  session: string
  seed: number
  n: number
  retired: number[]
  graph: GraphJson | null
  hadamard_options: number[][] | null
  generators: Generators | null
  history_length: number
  pending: PendingChoice | null
  state_hash: string
}

export interface OpResponse {
  status: string
  result?: Record<string, unknown>
  choices?: number[][] | null
  snapshot: Snapshot
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message)
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export class SessionApi {
  constructor(
    private base: string = '',
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const res = await this.fetchFn(this.base + path, init)
    if (!res.ok) {
      let detail = res.statusText
      try {
        const body = await res.json()
        if (body && typeof body.detail === 'string') detail = body.detail
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(res.status, detail)
    }
    return res
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.request(path, init)
    return (await res.json()) as T
  }

  private post(body: unknown): RequestInit {
    return {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    }
  }

  async newSession(seed = 0): Promise<{ id: string; snapshot: Snapshot }> {
    return this.json('/api/session', this.post({ seed }))
  }

  async getSnapshot(id: string): Promise<Snapshot> {
    return this.json(`/api/session/${id}`)
  }

  async op(id: string, op: string, args: Record<string, unknown> = {}): Promise<OpResponse> {
    return this.json(`/api/session/${id}/op`, this.post({ op, args }))
  }

  async choice(id: string, choice: number[]): Promise<OpResponse> {
    return this.json(`/api/session/${id}/choice`, this.post({ choice }))
  }

  async undo(id: string): Promise<OpResponse> {
    return this.json(`/api/session/${id}/undo`, { method: 'POST' })
  }

  async clone(id: string): Promise<{ id: string; snapshot: Snapshot }> {
    return this.json(`/api/session/${id}/clone`, { method: 'POST' })
  }

  async discard(id: string): Promise<void> {
    await this.request(`/api/session/${id}`, { method: 'DELETE' })
  }

  // exact text as served; used verbatim for the JSON panel and parity checks
  async exportText(id: string, format: 'json' | 'dot' | 'tableau'): Promise<string> {
    const res = await this.request(`/api/session/${id}/export?format=${format}`)
    return res.text()
  }
}

// Preview every pending option on speculative server-side clones; the
// clones are discarded after their snapshots are read.
export async function previewChoices(
  api: SessionApi,
  sessionId: string,
  options: number[][],
): Promise<{ option: number[]; graph: GraphJson | null }[]> {
  const previews: { option: number[]; graph: GraphJson | null }[] = []
  for (const option of options) {
    const child = await api.clone(sessionId)
    try {
      const done = await api.choice(child.id, option)
      previews.push({ option, graph: done.snapshot.graph })
    } finally {
      await api.discard(child.id)
    }
  }
  return previews
}
