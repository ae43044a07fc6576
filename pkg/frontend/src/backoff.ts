/** Exponential reconnect backoff: 1 s base doubling to a 30 s cap. */

export const BACKOFF_BASE_MS = 1_000;
export const BACKOFF_CAP_MS = 30_000;

export class Backoff {
  private attempt = 0;

  /** Delay for the next attempt, doubling from the base up to the cap. */
  next(): number {
    const ms = Math.min(BACKOFF_CAP_MS, BACKOFF_BASE_MS * 2 ** this.attempt);
    this.attempt += 1;
    return ms;
  }

  reset(): void {
    this.attempt = 0;
  }
}
