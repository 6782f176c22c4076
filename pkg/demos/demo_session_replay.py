"""Drive a scripted session on the office floor, save it, and prove the event
log replays to the identical state."""

import pathlib
import tempfile

from chi_walk.scenarios import office17
from chi_walk.session import Session, load_session, save_session

session = Session(office17(), seed=42)
session.tick({"type": "objectives", "objectives": [
    {"kind": "locate_aps", "params": {"scope": "all"}},
    {"kind": "floor_plan", "params": {"width": 60, "height": 36}},
]})

# walk the corridor, then poke into a room
for heading, distance in [(90, 17), (0, 55), (180, 30), (270, 10),
                          (180, 10), (90, 10)]:
    delta = session.tick({"type": "walk", "heading": heading,
                          "distance": distance})
    if delta.get("new_marks"):
        print(f"marks at t={session.walker.clock:5.1f}: {delta['new_marks']}")

session.tick({"type": "terminate"})
print(f"\nclock: {session.walker.clock:.1f}, marks: {len(session.marks)}, "
      f"pools: {len(session.pools)}")
print(f"constellation: {len(session.constellation)} APs positioned")

with tempfile.TemporaryDirectory() as tmp:
    path = pathlib.Path(tmp) / "session.json"
    save_session(session, path)
    replayed = load_session(path)
    match = replayed.canonical_bytes() == session.canonical_bytes()
    print(f"\nsaved {path.stat().st_size} bytes; replay identical: {match}")
    assert match
