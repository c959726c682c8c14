/** Error classes mapped to process exit codes by the CLI. */

/** Bad flags, bad adapter config, or a malformed config file: exit 2. */
export class UsageError extends Error {}

/** Anything that failed at run time (runner crash, unreadable image): exit 1. */
export class RuntimeFailure extends Error {}
