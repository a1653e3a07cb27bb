/** Error carrying the toolkit's stable variant string (e.g. "bad-magic",
 * "dimension-mismatch"), whether raised locally or parsed from the CLI's
 * JSON stderr. */
export class FeatwarpError extends Error {
  constructor(
    public readonly variant: string,
    message: string,
  ) {
    super(message);
    this.name = "FeatwarpError";
  }
}
