from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import pytest

from xract.ingest import ingest_directory
from xract.insight.client import MockLlmClient
from xract.pipeline import process_session
from xract.simulator import ScenarioSpec, generate_session
from xract.uad.store import SessionStore, read_session, write_session


@dataclass
class SessionBundle:
    root: Path
    raw_dir: Path
    cooked_dir: Path
    manifest: dict[str, Any]
    raw_store: SessionStore
    store: SessionStore  # ingested + fully processed
    client: MockLlmClient


def build_bundle(root: Path, preset: str, seed: int = 42, users=None) -> SessionBundle:
    raw_dir = root / "raw"
    cooked_dir = root / "cooked"
    raw_store, manifest = generate_session(
        ScenarioSpec(preset=preset, seed=seed, users=users), raw_dir
    )
    write_session(ingest_directory(raw_dir), cooked_dir)
    client = MockLlmClient()
    process_session(cooked_dir, client)
    client.reset_ledger()
    return SessionBundle(
        root=root,
        raw_dir=raw_dir,
        cooked_dir=cooked_dir,
        manifest=manifest,
        raw_store=raw_store,
        store=read_session(cooked_dir),
        client=client,
    )


@pytest.fixture(scope="session")
def a4(tmp_path_factory) -> SessionBundle:
    return build_bundle(tmp_path_factory.mktemp("a4"), "a4_ar_collab")


@pytest.fixture(scope="session")
def a3(tmp_path_factory) -> SessionBundle:
    return build_bundle(tmp_path_factory.mktemp("a3"), "a3_ar_markers")


@pytest.fixture(scope="session")
def a2(tmp_path_factory) -> SessionBundle:
    return build_bundle(tmp_path_factory.mktemp("a2"), "a2_mr_selection")
