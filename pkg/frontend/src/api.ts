// Typed client for the session API. Every mutation goes through postCommand;
// the UI has no other write path.

import type { Command, Snapshot, Suggestions } from './types';

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (body && typeof body.detail === 'string') detail = body.detail;
    } catch {
      // plain-text error body
    }
    throw new ApiError(res.status, detail);
  }
  return res.json() as Promise<T>;
}

export class SessionClient {
  constructor(
    public readonly base: string,
    public sessionId: string | null = null,
  ) {}

  async createSession(body: Record<string, unknown>): Promise<string> {
    const res = await fetch(`${this.base}/sessions`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
    const { id } = await asJson<{ id: string }>(res);
    this.sessionId = id;
    return id;
  }

  private path(suffix: string): string {
    if (!this.sessionId) throw new Error('no session yet');
    return `${this.base}/sessions/${this.sessionId}${suffix}`;
  }

  async getState(): Promise<Snapshot> {
    return asJson(await fetch(this.path('/state')));
  }

  async getSuggestions(): Promise<Suggestions> {
    return asJson(await fetch(this.path('/suggestions')));
  }

  async postCommand(command: Command): Promise<{ delta: Record<string, unknown>; events: number }> {
    const res = await fetch(this.path('/command'), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(command),
    });
    return asJson(res);
  }

  async pollEvents(since: number, timeoutSec = 20): Promise<{ events: Command[]; next: number }> {
    const res = await fetch(
      this.path(`/events?since=${since}&timeout=${timeoutSec}`),
    );
    return asJson(res);
  }
}
