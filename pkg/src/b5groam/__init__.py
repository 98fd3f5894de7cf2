"""Zero-trust roaming settlement: commitments, billing proofs, escrow ledger and rollup."""
