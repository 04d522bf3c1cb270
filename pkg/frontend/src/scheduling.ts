// Debouncing and latest-wins request sequencing for the live preview.

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
): (...args: A) => void {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (timer !== undefined) {
      clearTimeout(timer);
    }
    timer = setTimeout(() => fn(...args), waitMs);
  };
}

/**
 * Keeps at most one preview request "current": callers launch async work and
 * only the most recently launched one is allowed to deliver its result.
 */
export class LatestWins {
  private ticket = 0;

  async run<T>(work: () => Promise<T>, deliver: (value: T) => void, onError?: (e: unknown) => void) {
    const mine = ++this.ticket;
    try {
      const value = await work();
      if (mine === this.ticket) {
        deliver(value);
      }
    } catch (error) {
      if (mine === this.ticket && onError) {
        onError(error);
      }
    }
  }
}
