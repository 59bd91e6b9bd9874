#!/usr/bin/env python3
"""Write an `nvsr bench` manifest for a local VCTK copy.

Speakers are sorted by id; the last eight form the `test` split, the rest `train`.
VCTK 0.92 ships FLAC under wav48_silence_trimmed/; pass --convert DIR to transcode
the chosen microphone's files to 16-bit WAV with ffmpeg (must be on PATH). Older
releases with wav48/ are listed as they are.

    python3 scripts/vctk_manifest.py /data/VCTK-Corpus-0.92 --convert /data/vctk-wav > vctk.txt
    NVSR_VCTK_MANIFEST=$PWD/vctk.txt cargo test -p nvsr-suite --test acceptance -- unprocessed
"""

import argparse
import shutil
import subprocess
import sys
from pathlib import Path

TEST_SPEAKERS = 8


def find_audio_root(root: Path) -> Path:
    for name in ("wav48_silence_trimmed", "wav48"):
        if (root / name).is_dir():
            return root / name
    return root


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("root", type=Path, help="VCTK root directory")
    ap.add_argument("--mic", default="mic1", help="microphone suffix for FLAC releases (default mic1)")
    ap.add_argument("--convert", type=Path, metavar="DIR", help="transcode FLAC to WAV under DIR")
    ap.add_argument("--test-only", action="store_true", help="only list the test split")
    args = ap.parse_args()

    audio = find_audio_root(args.root)
    speakers = sorted(p.name for p in audio.iterdir() if p.is_dir())
    if len(speakers) <= TEST_SPEAKERS:
        print(f"found only {len(speakers)} speakers under {audio}", file=sys.stderr)
        return 1
    test = set(speakers[-TEST_SPEAKERS:])
    print(f"test speakers: {' '.join(sorted(test))}", file=sys.stderr)

    if args.convert and shutil.which("ffmpeg") is None:
        print("--convert needs ffmpeg on PATH", file=sys.stderr)
        return 1

    print("# path split")
    for spk in speakers:
        split = "test" if spk in test else "train"
        if args.test_only and split != "test":
            continue
        wavs = sorted((audio / spk).glob("*.wav"))
        flacs = sorted((audio / spk).glob(f"*_{args.mic}.flac"))
        if not wavs and flacs and args.convert:
            out_dir = args.convert.resolve() / spk
            out_dir.mkdir(parents=True, exist_ok=True)
            for f in flacs:
                dst = out_dir / (f.stem + ".wav")
                if not dst.exists():
                    subprocess.run(
                        ["ffmpeg", "-loglevel", "error", "-i", str(f), "-c:a", "pcm_s16le", str(dst)],
                        check=True,
                    )
                wavs.append(dst)
        elif not wavs and flacs:
            print(f"{spk}: FLAC only, rerun with --convert", file=sys.stderr)
            return 1
        for w in wavs:
            print(f"{w.resolve()} {split}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
