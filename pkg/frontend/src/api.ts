// Thin typed client over the engine's HTTP surface.

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

async function request(
  base: string,
  method: string,
  path: string,
  body?: unknown,
  fetchImpl: typeof fetch = fetch,
): Promise<any> {
  const response = await fetchImpl(`${base}${path}`, {
    method,
    headers: body === undefined ? {} : { "content-type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  const text = await response.text();
  const data = text ? JSON.parse(text) : {};
  if (!response.ok) {
    throw new ApiError(data.error ?? "HTTP_ERROR", data.message ?? text, response.status);
  }
  return data;
}

export interface EpisodeHandle {
  episode_id: string;
  speakers: string[];
  main_speaker: string;
}

export class Client {
  constructor(
    public readonly base: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  createEpisode(body: Record<string, unknown>): Promise<EpisodeHandle> {
    return request(this.base, "POST", "/episodes", body, this.fetchImpl);
  }

  openSession(
    episodeId: string,
    body: Record<string, unknown> = {},
  ): Promise<{ session_id: string; session_index: number }> {
    return request(this.base, "POST", `/episodes/${episodeId}/sessions`, body, this.fetchImpl);
  }

  postUtterance(
    sessionId: string,
    text: string,
    introduce = false,
  ): Promise<{ turn_index: number }> {
    return request(
      this.base,
      "POST",
      `/sessions/${sessionId}/utterances`,
      { text, introduce },
      this.fetchImpl,
    );
  }

  closeSession(sessionId: string): Promise<{ closed: boolean }> {
    return request(this.base, "POST", `/sessions/${sessionId}/close`, {}, this.fetchImpl);
  }

  getEpisode(episodeId: string): Promise<any> {
    return request(this.base, "GET", `/episodes/${episodeId}`, undefined, this.fetchImpl);
  }

  getMemory(episodeId: string): Promise<any> {
    return request(this.base, "GET", `/episodes/${episodeId}/memory`, undefined, this.fetchImpl);
  }

  eventsUrl(sessionId: string): string {
    return `${this.base}/sessions/${sessionId}/events`;
  }
}
