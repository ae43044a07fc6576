"""End-to-end drive of the installed package through its real entry points."""
import json, os, socket, subprocess, sys, tempfile, threading, time, urllib.request

FAIL = []
def check(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    if not ok:
        FAIL.append(name)

# 1. CLI score: benign and attack lines through the packaged default model
benign = '127.0.0.1 - - [10/Oct/2025:13:55:36 +0000] "GET /index.html HTTP/1.1" 200 2326'
attack = '203.0.113.9 - - [10/Oct/2025:13:55:36 +0000] "GET /search?q=%27%20UNION%20SELECT%20password%20FROM%20users-- HTTP/1.1" 200 512'
r = subprocess.run(["threatlight", "score", "--line", benign], capture_output=True, text=True)
out = json.loads(r.stdout)
check("cli score benign", r.returncode == 0 and out["verdict"]["attack_type"] == "BENIGN"
      and out["assessment"]["band"] == "GREEN" and out["assessment"]["final_score"] == 0.0,
      f"conf={out['verdict']['confidence']:.4f}")
r = subprocess.run(["threatlight", "score", "--line", attack], capture_output=True, text=True)
out = json.loads(r.stdout)
check("cli score attack", r.returncode == 0 and out["verdict"]["attack_type"] == "SQL_INJECTION"
      and out["assessment"]["band"] == "RED",
      f"conf={out['verdict']['confidence']:.4f} score={out['assessment']['final_score']:.2f}")

# 2. CLI replay on a generated corpus: conservation of counts
from threatlight.bench import write_corpus
with tempfile.TemporaryDirectory() as td:
    corpus = os.path.join(td, "corpus.log")
    write_corpus(corpus, 500, seed=11)
    r = subprocess.run(["threatlight", "replay", corpus, "--batch"], capture_output=True, text=True)
    rep = json.loads(r.stdout)
    check("cli replay conservation", r.returncode == 0 and rep["lines"] == 500
          and rep["parsed"] + rep["skipped"] == rep["lines"] and rep["verdicts"] == rep["parsed"],
          f"parsed={rep['parsed']} verdicts={rep['verdicts']} assessments={rep['assessments']}")

# 3. CLI bench batch mode against the analytic engine
r = subprocess.run(["threatlight", "bench", "--events", "2000", "--mode", "batch",
                    "--engine", "primary"], capture_output=True, text=True)
rep = json.loads(r.stdout)
check("cli bench primary", r.returncode == 0 and rep["events"] == 2000
      and rep["throughput_eps"] > 1000, f"eps={rep['throughput_eps']:.0f}")

# 4. CLI train on a tiny synthetic set, then load the model back
import numpy as np
rng = np.random.default_rng(3)
with tempfile.TemporaryDirectory() as td:
    data = os.path.join(td, "train.jsonl")
    with open(data, "w") as f:
        for i in range(400):
            y = i % 2
            x = rng.normal(loc=2.0 * y, scale=0.5, size=90)
            f.write(json.dumps({"features": [round(float(v), 4) for v in x], "label": y}) + "\n")
    model = os.path.join(td, "m.ssnn")
    r = subprocess.run(["threatlight", "train", "--data", data, "--out", model,
                        "--epochs", "12", "--seed", "0"], capture_output=True, text=True)
    from threatlight.nn.modelio import load_model
    net = load_model(model)
    check("cli train + load", r.returncode == 0 and os.path.exists(model),
          f"params={net.parameter_count}")

# 5. Service over real HTTP: status, metrics, events, SSE, chat
sock = socket.socket(); sock.bind(("127.0.0.1", 0)); port = sock.getsockname()[1]; sock.close()
with tempfile.TemporaryDirectory() as td:
    corpus = os.path.join(td, "replay.log")
    write_corpus(corpus, 300, seed=23)
    cfg_path = os.path.join(td, "svc.json")
    with open(cfg_path, "w") as f:
        json.dump({"listen": {"host": "127.0.0.1", "port": port},
                   "replay": {"path": corpus, "rate": 400.0}}, f)
    proc = subprocess.Popen(["threatlight", "serve", "--config", cfg_path],
                            stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    try:
        base = f"http://127.0.0.1:{port}"
        deadline = time.time() + 15
        status = None
        while time.time() < deadline:
            try:
                with urllib.request.urlopen(base + "/api/status", timeout=2) as resp:
                    status = json.loads(resp.read())
                if status["updated_at"] is not None:
                    break
            except OSError:
                pass
            time.sleep(0.3)
        check("service /api/status", status is not None and status["band"] in ("GREEN", "YELLOW", "RED")
              and status["updated_at"] is not None, f"band={status['band']} score={status['final_score']:.2f}")
        with urllib.request.urlopen(base + "/api/metrics", timeout=2) as resp:
            m = json.loads(resp.read())
        check("service /api/metrics", m["logs_assessed"] > 0
              and sum(m["by_attack_type"].values()) == m["network_events_processed"],
              f"logs={m['logs_assessed']} events={m['network_events_processed']}")
        with urllib.request.urlopen(base + "/api/events?limit=5", timeout=2) as resp:
            ev = json.loads(resp.read())
        check("service /api/events", isinstance(ev, list) and len(ev) <= 5 and
              all("event_id" in v for v in ev), f"n={len(ev)}")
        # SSE: read until one event: line arrives
        got_event = {}
        def read_sse():
            req = urllib.request.Request(base + "/api/stream")
            with urllib.request.urlopen(req, timeout=10) as resp:
                t0 = time.time()
                for raw in resp:
                    line = raw.decode()
                    if line.startswith("event:"):
                        got_event["name"] = line.split(":", 1)[1].strip()
                        got_event["dt"] = time.time() - t0
                        return
        t = threading.Thread(target=read_sse); t.start(); t.join(timeout=12)
        check("service /api/stream SSE", got_event.get("name") in ("verdict", "threat", "metrics"),
              f"first={got_event.get('name')} after {got_event.get('dt', -1):.2f}s")
        # chat offline fallback
        body = json.dumps({"message": "how do I rotate a password?"}).encode()
        req = urllib.request.Request(base + "/api/chat", data=body,
                                     headers={"content-type": "application/json"})
        with urllib.request.urlopen(req, timeout=5) as resp:
            lines = [json.loads(l) for l in resp.read().decode().strip().splitlines()]
        check("service /api/chat offline", lines[0]["kind"] == "meta" and lines[0]["offline"]
              and lines[-1]["kind"] == "done", f"entry={lines[0].get('entry')}")
        # chat 4 KiB cap -> 413
        big = json.dumps({"message": "x" * 5000}).encode()
        req = urllib.request.Request(base + "/api/chat", data=big,
                                     headers={"content-type": "application/json"})
        code = None
        try:
            urllib.request.urlopen(req, timeout=5)
        except urllib.error.HTTPError as e:
            code = e.code
        check("service /api/chat 413", code == 413, f"code={code}")
    finally:
        proc.terminate(); proc.wait(timeout=10)

print()
if FAIL:
    print("VERIFY FAILED:", ", ".join(FAIL)); sys.exit(1)
print("VERIFY OK: all drives passed")
