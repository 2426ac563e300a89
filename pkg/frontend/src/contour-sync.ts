import { ContourState, PointEdit } from './api';

/**
 * Serializes contour edits toward the server with a request-rate cap.
 *
 * Edits queue in order; consecutive moves of the same point coalesce so
 * a drag sends only the latest position. One request is in flight at a
 * time and dispatches at most once per `minIntervalMs`, so a drag
 * stream stays under the rate cap while the final state always matches
 * the last edit (the server response for it arrives last and wins).
 */
export class ContourSync {
  private queue: PointEdit[] = [];
  private inFlight = false;
  private lastDispatch = -Infinity;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly send: (edit: PointEdit) => Promise<ContourState>,
    private readonly onUpdate: (state: ContourState) => void,
    private readonly onError: (error: unknown) => void = () => {},
    private readonly minIntervalMs = 100,
  ) {}

  submit(edit: PointEdit): void {
    const last = this.queue[this.queue.length - 1];
    if (last && last.op === 'move' && edit.op === 'move' && last.index === edit.index) {
      last.point = edit.point;
    } else {
      this.queue.push({ ...edit });
    }
    this.pump();
  }

  /** Pending edits not yet dispatched (for tests and shutdown checks). */
  get pending(): number {
    return this.queue.length + (this.inFlight ? 1 : 0);
  }

  private pump(): void {
    if (this.inFlight || this.queue.length === 0 || this.timer !== null) return;
    const wait = this.lastDispatch + this.minIntervalMs - Date.now();
    if (wait > 0) {
      this.timer = setTimeout(() => {
        this.timer = null;
        this.pump();
      }, wait);
      return;
    }
    const edit = this.queue.shift() as PointEdit;
    this.inFlight = true;
    this.lastDispatch = Date.now();
    this.send(edit)
      .then((state) => this.onUpdate(state))
      .catch((error) => this.onError(error))
      .finally(() => {
        this.inFlight = false;
        this.pump();
      });
  }
}
