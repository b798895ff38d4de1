import json
import threading
from pathlib import Path

import pytest
import requests

from ambitype import modelfile, rules
from ambitype.engine import Session
from ambitype.service import make_server

SARKAR = "सरकार"
K_SA, K_YA, K_KA, K_A = "श", "य", "क", "अ"
FIVE_KEYS = (K_SA, K_YA, K_KA, K_A, K_YA)

NATIVE_CORPUS = "\n".join(["घर"] * 5 + ["कल"] * 3 + [f"{SARKAR} घर"] * 2)
ROMAN_CORPUS = "kafi accha hai\nkafi accha lagta hai\nkam accha\nhai hai\n"


@pytest.fixture(scope="module")
def models():
    return {
        "hi": modelfile.build_model(
            NATIVE_CORPUS, "hi", layout=rules.load_builtin_layout("hi"), k=100),
        "hi-Latn": modelfile.build_model(
            ROMAN_CORPUS, "hi-Latn",
            ruleset=rules.load_builtin_ruleset("hinglish"), k=100),
    }


@pytest.fixture(scope="module")
def base_url(models):
    server = make_server(models, port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    yield f"http://{host}:{port}"
    server.shutdown()
    server.server_close()
    thread.join(timeout=5)


def _session(base_url, language, mode=None) -> str:
    body = {"language": language}
    if mode:
        body["mode"] = mode
    r = requests.post(f"{base_url}/v1/session", json=body)
    assert r.status_code == 200, r.text
    return r.json()["sessionId"]


# ------------------------------------------------------------------- basics

def test_health_lists_languages(base_url):
    r = requests.get(f"{base_url}/v1/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "languages": ["hi", "hi-Latn"]}


def test_five_key_sequence_reaches_target_word(base_url):
    sid = _session(base_url, "hi")
    for key in FIVE_KEYS:
        r = requests.post(f"{base_url}/v1/session/{sid}/key", json={"key": key})
        assert r.status_code == 200
    out = r.json()
    assert out["composing"] == "".join(FIVE_KEYS)
    assert SARKAR in [c["surface"] for c in out["candidates"]]
    assert out["preview"] == SARKAR

    r = requests.post(f"{base_url}/v1/session/{sid}/commit",
                      json={"surface": SARKAR})
    assert r.json() == {"context": [SARKAR]}


def test_transcript_matches_direct_library_calls(base_url, models):
    direct = Session(models["hi"])
    sid = _session(base_url, "hi")
    for key in FIVE_KEYS:
        want = [{"surface": c.surface, "score": c.score, "source": c.source}
                for c in direct.press_key(key)]
        got = requests.post(f"{base_url}/v1/session/{sid}/key",
                            json={"key": key}).json()
        assert got["candidates"] == want
        assert got["composing"] == direct.composing
    direct.commit(SARKAR)
    got = requests.post(f"{base_url}/v1/session/{sid}/commit",
                        json={"surface": SARKAR}).json()
    assert got["context"] == direct.context_tokens
    want = [{"surface": c.surface, "score": c.score, "source": c.source}
            for c in direct.predict(3)]
    got = requests.get(f"{base_url}/v1/session/{sid}/predict?k=3").json()
    assert got["candidates"] == want


def test_backspace_steps_back_one_key(base_url, models):
    sid = _session(base_url, "hi")
    requests.post(f"{base_url}/v1/session/{sid}/key", json={"key": K_KA})
    requests.post(f"{base_url}/v1/session/{sid}/key", json={"key": K_YA})
    r = requests.post(f"{base_url}/v1/session/{sid}/backspace")
    assert r.status_code == 200
    out = r.json()
    assert out["composing"] == K_KA
    direct = Session(models["hi"])
    direct.press_key(K_KA)
    assert [c["surface"] for c in out["candidates"]] == \
        [c.surface for c in direct.current_candidates()]


def test_romanized_session_and_commit_learning(base_url):
    sid = _session(base_url, "hi-Latn")
    for ch in "kaafi":
        r = requests.post(f"{base_url}/v1/session/{sid}/key", json={"key": ch})
        assert r.status_code == 200
    assert "kafi" in [c["surface"] for c in r.json()["candidates"]]
    r = requests.post(f"{base_url}/v1/session/{sid}/commit",
                      json={"surface": "kafi"})
    assert r.json()["context"] == ["kafi"]


def test_sessions_are_isolated(base_url):
    a = _session(base_url, "hi")
    b = _session(base_url, "hi")
    requests.post(f"{base_url}/v1/session/{a}/key", json={"key": K_KA})
    r = requests.post(f"{base_url}/v1/session/{b}/key", json={"key": K_SA})
    assert r.json()["composing"] == K_SA


# ------------------------------------------------------------------- layout

def test_layout_endpoint_echoes_source_file(base_url):
    data = Path(rules.__file__).parent / "data" / "layout_hi.json"
    want = json.loads(data.read_text(encoding="utf-8"))
    r = requests.get(f"{base_url}/v1/layout/hi")
    assert r.status_code == 200
    assert r.json() == want


def test_layout_missing_for_romanized_language(base_url):
    assert requests.get(f"{base_url}/v1/layout/hi-Latn").status_code == 404
    assert requests.get(f"{base_url}/v1/layout/xx").status_code == 404


# ------------------------------------------------------------------- errors

def test_unknown_session_is_404(base_url):
    for method, path, body in [
            ("post", "/v1/session/beef/key", {"key": K_KA}),
            ("post", "/v1/session/beef/backspace", {}),
            ("post", "/v1/session/beef/commit", {"surface": "x"}),
            ("get", "/v1/session/beef/predict", None)]:
        r = getattr(requests, method)(f"{base_url}{path}",
                                      **({"json": body} if body is not None
                                         else {}))
        assert r.status_code == 404, path


def test_malformed_requests_are_400(base_url):
    sid = _session(base_url, "hi")
    url = f"{base_url}/v1/session/{sid}/key"
    r = requests.post(url, data=b"{not json",
                      headers={"Content-Type": "application/json"})
    assert r.status_code == 400
    assert requests.post(url, json=["list"]).status_code == 400
    assert requests.post(url, json={}).status_code == 400
    assert requests.post(url, json={"key": 5}).status_code == 400
    # ख is a sibling of क, not a representative: domain error, not a crash
    assert requests.post(url, json={"key": "ख"}).status_code == 400
    assert requests.post(f"{base_url}/v1/session", json={}).status_code == 400
    assert requests.post(f"{base_url}/v1/session",
                         json={"language": "xx"}).status_code == 400
    assert requests.post(f"{base_url}/v1/session",
                         json={"language": "hi", "mode": "bogus"}
                         ).status_code == 400
    assert requests.get(
        f"{base_url}/v1/session/{sid}/predict?k=zero").status_code == 400
    assert requests.get(
        f"{base_url}/v1/session/{sid}/predict?k=0").status_code == 400


def test_unknown_route_is_404(base_url):
    assert requests.get(f"{base_url}/v1/nope").status_code == 404
    assert requests.post(f"{base_url}/v1/session/x/nope",
                         json={}).status_code == 404
