/** Fixed-capacity ring buffer for streaming plot data. */

export class RingBuffer<T> {
  private buf: (T | undefined)[];
  private head = 0;
  private count = 0;

  constructor(readonly capacity: number) {
    if (capacity < 1) throw new Error("capacity must be >= 1");
    this.buf = new Array(capacity);
  }

  push(item: T): void {
    this.buf[this.head] = item;
    this.head = (this.head + 1) % this.capacity;
    if (this.count < this.capacity) this.count++;
  }

  get size(): number {
    return this.count;
  }

  get(i: number): T {
    if (i < 0 || i >= this.count) throw new RangeError(`index ${i}`);
    return this.buf[(this.head - this.count + i + this.capacity) % this.capacity] as T;
  }

  last(): T | undefined {
    return this.count ? this.get(this.count - 1) : undefined;
  }

  toArray(): T[] {
    const out: T[] = new Array(this.count);
    for (let i = 0; i < this.count; i++) out[i] = this.get(i);
    return out;
  }

  clear(): void {
    this.head = 0;
    this.count = 0;
  }
}
