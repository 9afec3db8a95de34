/**
 * Interval polling with backoff: 1 s between probes, doubling to a 5 s
 * ceiling. Iteration latency is sub-second against mock backends and
 * tens of seconds against live ones, so polling keeps the service
 * contract minimal while staying responsive in both regimes.
 */

export interface PollOptions {
  initialMs?: number;
  maxMs?: number;
  timeoutMs?: number;
  /** Injectable for tests; defaults to a real setTimeout sleep. */
  sleep?: (ms: number) => Promise<void>;
}

const DEFAULTS = { initialMs: 1000, maxMs: 5000, timeoutMs: 120_000 };

function realSleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/**
 * Probe until the predicate accepts a result, backing off between probes.
 * The first probe fires immediately. Rejects with the last probe error
 * or a timeout Error once the budget is spent.
 */
export async function pollUntil<T>(
  probe: () => Promise<T>,
  done: (value: T) => boolean,
  options: PollOptions = {},
): Promise<T> {
  const initialMs = options.initialMs ?? DEFAULTS.initialMs;
  const maxMs = options.maxMs ?? DEFAULTS.maxMs;
  const timeoutMs = options.timeoutMs ?? DEFAULTS.timeoutMs;
  const sleep = options.sleep ?? realSleep;

  let waited = 0;
  let delay = initialMs;
  for (;;) {
    const value = await probe();
    if (done(value)) {
      return value;
    }
    if (waited + delay > timeoutMs) {
      throw new Error(`polling timed out after ${waited} ms`);
    }
    await sleep(delay);
    waited += delay;
    delay = Math.min(delay * 2, maxMs);
  }
}
