/** WebSocket connection with automatic retry and exponential backoff. */

export interface SocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  send(data: string): void;
  close(): void;
}

export interface ConnectOptions {
  url: string;
  onMessage: (msg: unknown) => void;
  onStatus?: (status: "connecting" | "open" | "closed") => void;
  makeSocket?: (url: string) => SocketLike;
  schedule?: (fn: () => void, ms: number) => void;
  backoffMs?: number;
  maxBackoffMs?: number;
}

export interface Connection {
  send(obj: unknown): boolean;
  close(): void;
}

export function connect(opts: ConnectOptions): Connection {
  const makeSocket = opts.makeSocket
    ?? ((url: string) => new WebSocket(url) as unknown as SocketLike);
  const schedule = opts.schedule ?? ((fn, ms) => setTimeout(fn, ms));
  const base = opts.backoffMs ?? 500;
  const cap = opts.maxBackoffMs ?? 10000;

  let socket: SocketLike | null = null;
  let open = false;
  let closedByUser = false;
  let backoff = base;

  function dial(): void {
    if (closedByUser) return;
    opts.onStatus?.("connecting");
    socket = makeSocket(opts.url);
    socket.onopen = () => {
      open = true;
      backoff = base;
      opts.onStatus?.("open");
    };
    socket.onmessage = (ev) => {
      for (const line of ev.data.split("\n")) {
        const text = line.trim();
        if (!text) continue;
        try {
          opts.onMessage(JSON.parse(text));
        } catch {
          console.warn("dropped undecodable message", text);
        }
      }
    };
    socket.onerror = () => { /* close handler drives the retry */ };
    socket.onclose = () => {
      open = false;
      opts.onStatus?.("closed");
      if (!closedByUser) {
        schedule(dial, backoff);
        backoff = Math.min(backoff * 2, cap);
      }
    };
  }

  dial();
  return {
    send(obj: unknown): boolean {
      if (!open || !socket) return false;
      socket.send(JSON.stringify(obj) + "\n");
      return true;
    },
    close(): void {
      closedByUser = true;
      socket?.close();
    },
  };
}
