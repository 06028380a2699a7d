// Per-symptom difference between the entered query and a retrieved candidate,
// mirroring how the engine builds its delta: "added" means present in the
// query but not the candidate.

export interface SymptomDiff {
  added: number[];
  removed: number[];
  shared: number[];
}

export function bitsToIds(bits: string): number[] {
  const ids: number[] = [];
  for (let i = 0; i < bits.length; i++) {
    if (bits[i] === "1") {
      ids.push(i);
    }
  }
  return ids;
}

export function diffAgainstCandidate(queryBits: string, candidateBits: string): SymptomDiff {
  if (queryBits.length !== candidateBits.length) {
    throw new Error(`vector lengths differ: ${queryBits.length} vs ${candidateBits.length}`);
  }
  const diff: SymptomDiff = { added: [], removed: [], shared: [] };
  for (let i = 0; i < queryBits.length; i++) {
    const q = queryBits[i] === "1";
    const c = candidateBits[i] === "1";
    if (q && c) {
      diff.shared.push(i);
    } else if (q) {
      diff.added.push(i);
    } else if (c) {
      diff.removed.push(i);
    }
  }
  return diff;
}

export function agreementScore(queryBits: string, candidateBits: string): number {
  if (queryBits.length !== candidateBits.length) {
    throw new Error(`vector lengths differ: ${queryBits.length} vs ${candidateBits.length}`);
  }
  let agree = 0;
  for (let i = 0; i < queryBits.length; i++) {
    if (queryBits[i] === candidateBits[i]) {
      agree++;
    }
  }
  return agree / queryBits.length;
}
