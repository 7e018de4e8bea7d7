/** Build-time server base URL. Empty string means same-origin, which is the
 *  right default when the static bundle is served behind the game server or
 *  a reverse proxy. Edit (or sed) this single constant when deploying the
 *  bundle against a remote API. */
export const BASE_URL: string = "";
