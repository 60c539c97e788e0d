#!/usr/bin/env python3
"""Regenerates crates/core/tests/fixtures.

Everything is deterministic: commit shas are sha1 digests of fixed labels.
Seeded corpus files mark the line carrying the seeded issue while they are
built; the manifest records the expected finding for each file.
"""

import hashlib
import json
import shutil
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "crates" / "core" / "tests" / "fixtures"
MARK = "@@SEED@@"


def sha(label):
    return hashlib.sha1(label.encode()).hexdigest()


def new(repo):
    return sha(repo + "#latest")


def old(repo):
    return sha(repo + "#stale")


def write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# ---------------------------------------------------------------- forge data

def key(path):
    out = []
    for ch in path.lstrip("/"):
        if ch == "/":
            out.append("~")
        elif ch.isascii() and (ch.isalnum() or ch in "._-"):
            out.append(ch)
        else:
            out.append("%%%02X" % ord(ch))
    return "".join(out)


def record(host, path, body=None, status=None):
    base = FIX / "forge" / host / key(path)
    if body is not None:
        write(base.with_name(base.name + ".body"), body)
    if status is not None:
        write(base.with_name(base.name + ".status"), str(status))


def gh(path, body=None, status=None):
    record("api.github.com", path, body, status)


def action_repo(slug, style, refs):
    """style: release | tags | head. refs: extra refs resolving to the latest sha."""
    latest = new(slug)
    if style == "release":
        gh(f"repos/{slug}/releases/latest",
           json.dumps({"tag_name": "v3.1.0", "published_at": "2024-01-15T10:00:00Z"}))
        gh(f"repos/{slug}/commits/v3.1.0", latest)
    else:
        gh(f"repos/{slug}/releases/latest", status=404)
        if style == "tags":
            tags = [
                {"name": "v1.9.0", "commit": {"sha": old(slug)}},
                {"name": "v1.10.0", "commit": {"sha": latest}},
                {"name": "nightly", "commit": {"sha": sha(slug + "#nightly")}},
            ]
            gh(f"repos/{slug}/tags?per_page=100", json.dumps(tags))
        else:
            gh(f"repos/{slug}/tags?per_page=100", "[]")
            gh(f"repos/{slug}/commits/HEAD", latest)
    for r in refs:
        gh(f"repos/{slug}/commits/{r}", latest)


def upstream_action(slug, latest_tag, stale_refs):
    """A well-known action: latest release plus stale refs pointing elsewhere."""
    gh(f"repos/{slug}/releases/latest",
       json.dumps({"tag_name": latest_tag, "published_at": "2024-02-01T00:00:00Z"}))
    gh(f"repos/{slug}/commits/{latest_tag}", new(slug))
    major = latest_tag.split(".")[0]
    gh(f"repos/{slug}/commits/{major}", new(slug))
    for r in stale_refs:
        gh(f"repos/{slug}/commits/{r}", sha(f"{slug}@{r}"))


# ---------------------------------------------------------- worked examples

CHECKOUT_OLD = old("actions/checkout")
SETUP_PY_OLD = old("actions/setup-python")
CACHE_OLD = old("actions/cache")

ISSUE_TITLE = """\
name: Issue triage
on:
  issues:
    types: [opened, edited]
jobs:
  check-title:
    runs-on: ubuntu-latest
    permissions:
      issues: read
    steps:
      - name: Check issue title
        run: |
          title="${{ github.event.issue.title }}"
          if [[ $title =~ ^octocat ]]; then
            echo "Issue title starts with 'octocat'"
            exit 0
          else
            echo "Issue title did not start with 'octocat'"
            exit 1
          fi
"""

ISSUE_TITLE_SAFE = """\
name: Issue triage
on:
  issues:
    types: [opened, edited]
jobs:
  check-title:
    runs-on: ubuntu-latest
    permissions:
      issues: read
    steps:
      - name: Check issue title
        env:
          TITLE: ${{ github.event.issue.title }}
        run: |
          title="$TITLE"
          if [[ $title =~ ^octocat ]]; then
            echo "Issue title starts with 'octocat'"
            exit 0
          else
            echo "Issue title did not start with 'octocat'"
            exit 1
          fi
"""

PR_BODY = """\
name: Pull Request Validation
on:
  pull_request:
    types: [opened, synchronize, reopened, edited]
jobs:
  validate:
    name: Validate pull request
    runs-on: ubuntu-latest
    steps:
    - name: Checkout
      uses: actions/checkout@v2
      with:
        ref: ${{github.event.pull_request.head.sha}}
        fetch-depth: 0
    - name: Check commit count
      run: |
        cat << EOF | egrep -qsi '^disable-check:.*\\<commit-count\\>'
        ${{github.event.pull_request.body}}
        EOF
"""

STALE_PINS = f"""\
name: triage
on: issues
permissions:
  contents: read
  issues: write
jobs:
  job_A:
    runs-on: ubuntu-latest
    steps:
      - uses: actions/checkout@{CHECKOUT_OLD}
      - uses: actions/setup-python@{SETUP_PY_OLD}
        with:
          python-version: "3.11"
      - run: pip install -r requirements.txt
  job_B:
    runs-on: ubuntu-latest
    steps:
      - name: Greet
        run: echo "Thanks ${{{{ github.actor }}}} for the report"
      - uses: actions/cache@{CACHE_OLD}
        with:
          path: ~/.cache/pip
          key: pip-${{{{ hashFiles('requirements.txt') }}}}
"""


def examples():
    d = FIX / "examples"
    write(d / "issue_title.yml", ISSUE_TITLE)
    write(d / "issue_title_safe.yml", ISSUE_TITLE_SAFE)
    write(d / "pr_body.yml", PR_BODY)
    write(d / "stale_pins.yml", STALE_PINS)
    upstream_action("actions/checkout", "v4.1.1", ["v2", "v3"])
    upstream_action("actions/setup-python", "v5.0.0", [])
    upstream_action("actions/cache", "v4.0.0", [])


# ------------------------------------------------------------- seeded corpus

TRIGGERS = [
    (["on: issues"], ["issues"]),
    (["on: [pull_request, push]"], ["pull_request", "push"]),
    (["on:", "  issue_comment:", "    types: [created]"], ["issue_comment"]),
    (["on:", "  pull_request_target:", "    types: [opened, synchronize]",
      "  push:", "    branches: [main]"], ["pull_request_target", "push"]),
    (["on:", "  schedule:", "    - cron: '0 3 * * 1'", "  workflow_dispatch:"],
     ["schedule", "workflow_dispatch"]),
    (["on: discussion"], ["discussion"]),
]

SETUP = "acme/setup-tool"
CACHE = "acme/cache-deps"
DEPLOY = "example/deploy-action"
SHARED = "octo-org/shared-workflows"


def corpus_forge():
    action_repo(SETUP, "release", ["v3", "main", "latest"])
    action_repo(CACHE, "tags", ["v1"])
    action_repo(DEPLOY, "head", ["main"])
    action_repo(SHARED, "release", ["v2"])


def checkout_step():
    return [f"      - uses: {SETUP}@{new(SETUP)}"]


def job(jid, steps, perms=True, if_=None, extra=()):
    lines = [f"  {jid}:", "    runs-on: ubuntu-latest"]
    if if_:
        lines.append(f"    if: {if_}")
    if perms:
        lines += ["    permissions:", "      contents: read"]
    lines += list(extra)
    lines += ["    steps:"] + steps
    return lines


def workflow(name, trig, jobs, wf_perms=None, wf_env=(), perms_last=False):
    lines = [f"name: {name}"] + TRIGGERS[trig][0]
    if wf_env:
        lines += ["env:"] + [f"  {k}: {v}" for k, v in wf_env]
    if wf_perms and not perms_last:
        lines += wf_perms
    lines.append("jobs:")
    for j in jobs:
        lines += j
    if wf_perms and perms_last:
        lines += wf_perms
    return lines


def finish(lines):
    """Returns (text without marks, 1-based line numbers of marked lines)."""
    marked = [i + 1 for i, l in enumerate(lines) if MARK in l]
    text = "\n".join(l.replace(MARK, "").rstrip() for l in lines) + "\n"
    return text, marked


CI_SEEDS = [
    ("ISSUE_TITLE", ["github.event.issue.title"]),
    ("PR_BODY", ["github.event.pull_request.body"]),
    ("ACTOR", ["github.actor", "GITHUB.actor"]),
    ("COMMENT_BODY", ["github.event.comment.body"]),
    ("HEAD_REF", ["github.head_ref"]),
    ("COMMIT_MESSAGE", ["github.event.commits[0].message", "github.event.head_commit.message"]),
]


def ci_case(tag, exprs, i):
    # head_commit.message carries its own tag; keep every seed of a file on `tag`.
    x = exprs[0] if tag == "COMMIT_MESSAGE" else exprs[i % len(exprs)]
    t = "${{ " + x + " }}"
    env = ["        env:", f"          VALUE: {t}"]
    trig = i % 6
    cond = "unconditional"
    job_id = "build"
    if i == 0:
        vs = [f"      - name: Show value", f"        run: echo \"{t}\" {MARK}"]
        ss = ["      - name: Show value"] + env + ["        run: echo \"$VALUE\""]
        pos = 2
        jobs_v = [job(job_id, checkout_step() + vs)]
        jobs_s = [job(job_id, checkout_step() + ss)]
    elif i == 1:
        body = lambda v: ["        run: |", "          echo start", f"          value=\"{v}\"", "          echo \"$value\""]
        vs = ["      - name: Inspect"] + body(t)
        vs[3] += MARK
        ss = ["      - name: Inspect"] + env + body("$VALUE")
        pos = 1
        jobs_v = [job(job_id, vs)]
        jobs_s = [job(job_id, ss)]
    elif i == 2:
        doc = lambda v: ["        run: |", "          cat << EOF | grep -qi 'skip-ci'", f"          {v}", "          EOF"]
        vs = [f"      - uses: {CACHE}@{new(CACHE)}", "      - name: Check body"] + doc(t)
        vs[4] += MARK
        ss = [f"      - uses: {CACHE}@{new(CACHE)}", "      - name: Check body"] + env + doc("$VALUE")
        pos = 2
        jobs_v = [job(job_id, vs)]
        jobs_s = [job(job_id, ss)]
    elif i == 3:
        vs = ["      - name: Label", "        if: github.event_name != 'push'", f"        run: echo {t} {MARK}"]
        ss = ["      - name: Label", "        if: github.event_name != 'push'"] + env + ["        run: echo \"$VALUE\""]
        pos = 1
        cond = "conditional"
        jobs_v = [job(job_id, vs)]
        jobs_s = [job(job_id, ss)]
    elif i == 4:
        job_id = "report"
        first = job("build", checkout_step() + ["      - run: make test"])
        guard = "${{ github.repository_owner == 'acme' }}"
        vs = ["      - name: Report", "        run: |", f"          ./report.sh --title {t} {MARK}"]
        ss = ["      - name: Report"] + env + ["        run: |", "          ./report.sh --title \"$VALUE\""]
        pos = 1
        cond = "conditional"
        jobs_v = [first, job(job_id, vs, if_=guard)]
        jobs_s = [first, job(job_id, ss, if_=guard)]
    else:
        t = "${{" + x + "}}"
        env = ["        env:", "          SHA: ${{ github.sha }}", f"          VALUE: {t}"]
        vs = checkout_step() + ["      - name: Notify", "        env:", "          SHA: ${{ github.sha }}",
                                f"        run: ./scripts/notify.sh {t} $SHA --quiet {MARK}"]
        ss = checkout_step() + ["      - name: Notify"] + env + ["        run: ./scripts/notify.sh \"$VALUE\" $SHA --quiet"]
        pos = 2
        jobs_v = [job(job_id, vs)]
        jobs_s = [job(job_id, ss)]
    name = f"ci-{tag.lower()}-{i}"
    return (workflow(name, trig, jobs_v), workflow(name, trig, jobs_s),
            [dict(code=f"CI_{tag}", job=job_id, step_position=pos, conditionality=cond)])


def secret_outside_case(i):
    trig = (i + 1) % 6
    cond = "unconditional"
    job_id = "publish"
    pos = 1
    jobs_s = None
    if i == 0:
        vs = ["      - name: Ping", "        run: |",
              f"          curl -sf -H \"X-Token: ${{{{ secrets.API_TOKEN }}}}\" https://api.example.org/ping {MARK}"]
        ss = ["      - name: Ping", "        env:", "          API_TOKEN: ${{ secrets.API_TOKEN }}", "        run: |",
              "          curl -sf -H \"X-Token: $API_TOKEN\" https://api.example.org/ping"]
        jobs_v, jobs_s = [job(job_id, vs)], [job(job_id, ss)]
    elif i == 1:
        vs = ["      - name: Deploy", f"        if: ${{{{ secrets.DEPLOY_KEY }}}} {MARK}", "        run: ./deploy.sh"]
        ss = ["      - name: Deploy", "        if: env.DEPLOY_KEY != ''", "        run: ./deploy.sh"]
        cond = "conditional"
        jobs_v = [job(job_id, vs)]
        jobs_s = [job(job_id, ss, extra=["    env:", "      DEPLOY_KEY: ${{ secrets.DEPLOY_KEY }}"])]
    elif i == 2:
        pos = 0
        cred = lambda pw: ["    container:", "      image: ghcr.io/acme/builder:1", "      credentials:",
                           "        username: bot", f"        password: {pw}"]
        ev = cred(f"${{{{ secrets.REGISTRY_PASSWORD }}}} {MARK}")
        es = ["    env:", "      REGISTRY_PASSWORD: ${{ secrets.REGISTRY_PASSWORD }}"] + cred("${{ env.REGISTRY_PASSWORD }}")
        steps = ["      - run: make package"]
        jobs_v, jobs_s = [job(job_id, steps, extra=ev)], [job(job_id, steps, extra=es)]
    elif i == 3:
        doc = lambda v: ["        run: |", "          cat << EOF > ~/.pypirc", "          [pypi]",
                         "          username = __token__", f"          password = {v}", "          EOF"]
        vs = checkout_step() + ["      - name: Configure index"] + doc("${{ secrets.PYPI_TOKEN }}")
        vs[-2] += MARK
        ss = checkout_step() + ["      - name: Configure index", "        env:",
                                "          PYPI_TOKEN: ${{ secrets.PYPI_TOKEN }}"] + doc("$PYPI_TOKEN")
        pos = 2
        jobs_v, jobs_s = [job(job_id, vs)], [job(job_id, ss)]
    elif i == 4:
        vs = [f"      - run: echo ${{{{ secrets.NPM_TOKEN }}}} > ~/.npmrc {MARK}", "      - run: npm publish"]
        ss = ["      - run: echo \"$NPM_TOKEN\" > ~/.npmrc", "        env:", "          NPM_TOKEN: ${{ secrets.NPM_TOKEN }}",
              "      - run: npm publish"]
        jobs_v, jobs_s = [job(job_id, vs)], [job(job_id, ss)]
    else:
        job_id = "push-image"
        first = job("build", ["      - run: docker build -t app ."])
        guard = "github.ref == 'refs/heads/main'"
        vs = ["      - name: Login", "        run: |",
              f"          docker login -u bot -p ${{{{ secrets.DOCKER_PASSWORD }}}} registry.example.org {MARK}"]
        ss = ["      - name: Login", "        env:", "          DOCKER_PASSWORD: ${{ secrets.DOCKER_PASSWORD }}",
              "        run: |", "          echo \"$DOCKER_PASSWORD\" | docker login -u bot --password-stdin registry.example.org"]
        cond = "conditional"
        jobs_v = [first, job(job_id, vs, if_=guard)]
        jobs_s = [first, job(job_id, ss, if_=guard)]
    name = f"secret-outside-env-{i}"
    return (workflow(name, trig, jobs_v), workflow(name, trig, jobs_s),
            [dict(code="SECRET_OUTSIDE_ENV", job=job_id, step_position=pos, conditionality=cond)])


def secret_derived_case(i):
    trig = (i + 2) % 6
    cond = "unconditional"
    job_id = "notify"
    pos = 1
    wf_env_v = wf_env_s = ()
    if i == 0:
        vs = ["      - name: Hook", "        env:",
              f"          URL: \"https://hooks.example.org/${{{{ secrets.HOOK_ID }}}}/notify\" {MARK}",
              "        run: curl -sf -X POST \"$URL\""]
        ss = ["      - name: Hook", "        env:", "          HOOK_ID: ${{ secrets.HOOK_ID }}",
              "        run: curl -sf -X POST \"https://hooks.example.org/$HOOK_ID/notify\""]
    elif i == 1:
        vs = [f"      - uses: {DEPLOY}@{new(DEPLOY)}", "        with:", f"          auth: Bearer ${{{{ secrets.TOKEN }}}} {MARK}"]
        ss = [f"      - uses: {DEPLOY}@{new(DEPLOY)}", "        with:", "          auth: ${{ secrets.TOKEN }}"]
    elif i == 2:
        job_id, pos = "-", 0
        wf_env_v = [("BASIC", "${{ format('{0}:{1}', secrets.USER, secrets.PASS) }} " + MARK)]
        wf_env_s = [("USER", "${{ secrets.USER }}"), ("PASS", "${{ secrets.PASS }}")]
        vs = ["      - run: curl -sf -u \"$BASIC\" https://api.example.org"]
        ss = ["      - run: curl -sf -u \"$USER:$PASS\" https://api.example.org"]
    elif i == 3:
        pos = 0
        vs = ["      - run: ./migrate.sh"]
        ss = ["      - run: ./migrate.sh \"postgres://app:$DB_PASSWORD@db/app\""]
        ev = ["    env:", f"      DSN: postgres://app:${{{{ secrets.DB_PASSWORD }}}}@db/app {MARK}"]
        es = ["    env:", "      DB_PASSWORD: ${{ secrets.DB_PASSWORD }}"]
        name = f"secret-derived-{i}"
        return (workflow(name, trig, [job(job_id, vs, extra=ev)]),
                workflow(name, trig, [job(job_id, ss, extra=es)]),
                [dict(code="SECRET_DERIVED", job=job_id, step_position=pos, conditionality=cond)])
    elif i == 4:
        vs = [f"      - uses: {CACHE}@{new(CACHE)}", "        with:", "          path: ~/.cache",
              f"          key: deps-${{{{ secrets.CACHE_SALT }}}} {MARK}"]
        ss = [f"      - uses: {CACHE}@{new(CACHE)}", "        with:", "          path: ~/.cache",
              "          key: ${{ secrets.CACHE_SALT }}"]
    else:
        cond = "conditional"
        vs = ["      - name: Comment", "        if: github.event_name == 'push'", "        env:",
              f"          TOKEN: ${{{{ secrets.BOT_TOKEN || github.token }}}} {MARK}", "        run: ./comment.sh"]
        ss = ["      - name: Comment", "        if: github.event_name == 'push'", "        env:",
              "          TOKEN: ${{ secrets.BOT_TOKEN }}", "        run: ./comment.sh"]
    name = f"secret-derived-{i}"
    return (workflow(name, trig, [job(job_id if job_id != "-" else "notify", vs)], wf_env=wf_env_v),
            workflow(name, trig, [job(job_id if job_id != "-" else "notify", ss)], wf_env=wf_env_s),
            [dict(code="SECRET_DERIVED", job=job_id, step_position=pos, conditionality=cond)])


def action_case(code, i):
    """Seeds OUTDATED_WF (stale pinned sha) or UNPINNED_WF (tag/branch at latest)."""
    trig = (i + 3) % 6
    if code == "OUTDATED_WF":
        refs = [(SETUP, ""), (CACHE, ""), (SHARED, "/.github/workflows/release.yml"),
                (DEPLOY, ""), (SETUP, "/lint"), (CACHE, "")]
        repo, sub = refs[i]
        bad = old(repo)
    else:
        refs = [(SETUP, "", "v3"), (SETUP, "", "main"), (SHARED, "/.github/workflows/release.yml", "v2"),
                (CACHE, "", "v1"), (SETUP, "", "latest"), (DEPLOY, "", "main")]
        repo, sub, bad = refs[i]
    good = new(repo)
    job_id = "build"
    pos = 1

    def jobs(ref, mark):
        nonlocal job_id, pos
        use = f"{repo}{sub}@{ref}"
        if sub.startswith("/.github/workflows/"):
            job_id, pos = "release", 0
            lines = ["  release:", "    permissions:", "      contents: read", f"    uses: {use}{mark}",
                     "    with:", "      dry-run: false", "    secrets: inherit"]
            return [job("test", ["      - run: make test"]), lines]
        if i == 3:
            job_id, pos = "deploy", 2
            steps = ["      - run: ./build.sh", "      - name: Deploy", "        if: github.ref == 'refs/heads/main'",
                     f"        uses: {use}{mark}", "        with:", "          environment: production"]
            return [job("test", ["      - run: make test"]), job("deploy", steps)]
        if i == 5:
            job_id, pos = "package", 3
            steps = ["      - run: make", "      - run: make check", f"      - uses: {use}{mark}",
                     "        with:", "          path: dist"]
            return [job("lint", ["      - run: make lint"]), job("package", steps)]
        steps = [f"      - uses: {use}{mark}", "      - run: make"]
        if i == 1:
            steps = ["      - run: make deps", f"      - uses: {use}{mark}", "        with:", "          path: ~/.cache"]
            pos = 2
        return [job(job_id, steps)]

    name = f"{code.lower().replace('_', '-')}-{i}"
    v = workflow(name, trig, jobs(bad, " " + MARK))
    s = workflow(name, trig, jobs(good, ""))
    return v, s, [dict(code=code, job=job_id, step_position=pos, conditionality="not_applicable")]


def perm_global_case(i):
    trig = (i + 4) % 6
    perms = ["permissions:" + " " + MARK, "  contents: read"]
    steps = ["      - run: make"]
    if i == 0:
        v = workflow("perm-global-0", trig, [job("build", steps, perms=False)], wf_perms=perms)
        s = workflow("perm-global-0", trig, [job("build", steps)])
        jid = "build"
    elif i == 1:
        perms = ["permissions: read-all " + MARK]
        v = workflow("perm-global-1", trig, [job("build", steps, perms=False), job("test", steps, perms=False)], wf_perms=perms)
        s = workflow("perm-global-1", trig, [job("build", steps), job("test", steps)])
        jid = "build"
    elif i == 2:
        v = workflow("perm-global-2", trig, [job("build", steps), job("test", steps, perms=False)], wf_perms=perms)
        s = workflow("perm-global-2", trig, [job("build", steps), job("test", steps)])
        jid = "test"
    elif i == 3:
        perms = ["permissions: " + MARK, "  contents: write", "  pull-requests: write"]
        v = workflow("perm-global-3", trig, [job("release", steps, perms=False)], wf_perms=perms)
        s = workflow("perm-global-3", trig, [job("release", steps)])
        jid = "release"
    elif i == 4:
        call = ["  call:", f"    uses: {SHARED}/.github/workflows/release.yml@{new(SHARED)}"]
        call_s = ["  call:", "    permissions:", "      contents: read",
                  f"    uses: {SHARED}/.github/workflows/release.yml@{new(SHARED)}"]
        v = workflow("perm-global-4", trig, [call, job("build", steps)], wf_perms=perms)
        s = workflow("perm-global-4", trig, [call_s, job("build", steps)])
        jid = "call"
    else:
        v = workflow("perm-global-5", trig, [job("build", steps, perms=False)], wf_perms=perms, perms_last=True)
        s = workflow("perm-global-5", trig, [job("build", steps)])
        jid = "build"
    return v, s, [dict(code="MISCONF_PERM_GLOBAL", job=jid, step_position=0, conditionality="not_applicable")]


def perm_default_case(i):
    trig = (i + 5) % 6
    name = f"perm-default-{i}"
    steps = ["      - run: make"]
    jid = "-"
    if i in (0, 3):
        v = workflow(name, trig, [job("build", steps, perms=False)])
        s = workflow(name, trig, [job("build", steps)])
    elif i in (1, 4):
        v = workflow(name, trig, [job("build", steps, perms=False), job("test", steps, perms=False)])
        s = workflow(name, trig, [job("build", steps), job("test", steps)])
    else:
        v = workflow(name, trig, [job("build", steps), job("docs", steps, perms=False)])
        s = workflow(name, trig, [job("build", steps), job("docs", steps)])
        jid = "docs"
    v[0] += " " + MARK
    return v, s, [dict(code="MISCONF_PERM_DEFAULT", job=jid, step_position=0, conditionality="not_applicable")]


def corpus():
    corpus_forge()
    d = FIX / "corpus"
    cases = []
    for tag, exprs in CI_SEEDS:
        cases += [ci_case(tag, exprs, i) for i in range(6)]
    cases += [secret_outside_case(i) for i in range(6)]
    cases += [secret_derived_case(i) for i in range(6)]
    cases += [action_case("OUTDATED_WF", i) for i in range(6)]
    cases += [action_case("UNPINNED_WF", i) for i in range(6)]
    cases += [perm_global_case(i) for i in range(6)]
    cases += [perm_default_case(i) for i in range(6)]
    entries = []
    for n, (v, s, expected) in enumerate(cases):
        name = v[0].split(":", 1)[1].strip().replace(MARK, "").strip()
        text_v, marked = finish(v)
        text_s, none = finish(s)
        assert len(marked) == len(expected) == 1, name
        assert not none, name
        fname = f"{n:03d}-{name}.yml"
        write(d / "vulnerable" / fname, text_v)
        write(d / "safe" / fname, text_s)
        trig = next(events for lines, events in TRIGGERS if "\n".join(lines) + "\n" in text_v)
        for e, line in zip(expected, marked):
            e["line"] = line
        entries.append(dict(file=fname, events=trig, expected=expected))
    manifest = {"vulnerable_dir": "vulnerable", "safe_dir": "safe", "files": entries}
    write(d / "manifest.json", json.dumps(manifest, indent=2) + "\n")


# ------------------------------------------------------- permission corpus

def permissions():
    d = FIX / "permissions"
    for i in range(19):
        write(d / f"global-{i:02d}.yml",
              f"name: global {i}\non: push\npermissions:\n  contents: read\njobs:\n  build:\n    runs-on: ubuntu-latest\n    steps:\n      - run: make\n")
    for i in range(31):
        write(d / f"none-{i:02d}.yml",
              f"name: none {i}\non: push\njobs:\n  build:\n    runs-on: ubuntu-latest\n    steps:\n      - run: make\n")


# ------------------------------------------------ project and repo fixtures

def pypi(name, urls, home=None, status=None):
    if status:
        record("pypi.org", f"pypi/{name}/json", status=status)
        return
    body = {"info": {"name": name, "project_urls": urls, "home_page": home}}
    record("pypi.org", f"pypi/{name}/json", json.dumps(body))


def remote_repo(slug, workflows, manifests):
    """workflows: {file name: text} or None for no workflow directory."""
    gh(f"repos/{slug}", json.dumps({"full_name": slug, "default_branch": "main"}))
    if workflows is None:
        gh(f"repos/{slug}/contents/.github/workflows", status=404)
    else:
        listing = [{"name": n, "path": f".github/workflows/{n}", "type": "file"} for n in sorted(workflows)]
        listing.append({"name": "README.md", "path": ".github/workflows/README.md", "type": "file"})
        gh(f"repos/{slug}/contents/.github/workflows", json.dumps(listing))
        for n, text in workflows.items():
            gh(f"repos/{slug}/contents/.github/workflows/{n}", text)
    for f in ("pyproject.toml", "requirements.txt"):
        if f in manifests:
            gh(f"repos/{slug}/contents/{f}", manifests[f])
        else:
            gh(f"repos/{slug}/contents/{f}", status=404)


ALPHA_CI = """\
name: ci
on: [push, pull_request]
permissions:
  contents: read
jobs:
  test:
    runs-on: ubuntu-latest
    steps:
      - uses: actions/checkout@v3
      - run: pytest
"""

ALPHA_RELEASE = """\
name: release
on:
  release:
    types: [published]
jobs:
  publish:
    runs-on: ubuntu-latest
    permissions:
      id-token: write
    steps:
      - uses: actions/checkout@%s
      - run: python -m build
""" % new("actions/checkout")

GAMMA_LINT = """\
name: lint
on: pull_request_target
jobs:
  lint:
    runs-on: ubuntu-latest
    steps:
      - run: echo "Linting ${{ github.event.pull_request.title }}"
"""

EPSILON = {
    "a.yml": "on: push\njobs:\n  a:\n    permissions: {}\n    steps:\n      - run: echo ok\n",
    "b.yml": "on: issues\njobs:\n  b:\n    steps:\n      - run: echo \"${{ github.event.issue.body }}\"\n",
    "c.yaml": "on: [push\n",
}

PROJECT_CI = """\
name: project ci
on:
  pull_request:
  push:
    branches: [main]
jobs:
  test:
    runs-on: ubuntu-latest
    permissions:
      contents: read
    steps:
      - uses: actions/checkout@v4
      - name: Title check
        run: echo "${{ github.event.pull_request.title }}"
"""


def project():
    d = FIX / "project"
    write(d / "requirements.txt", "alpha-lib>=1.0\nBeta_Tools==2.*  # tools\nno-meta\ndelta-pkg\nunknown-pkg\n")
    write(d / ".github" / "workflows" / "ci.yml", PROJECT_CI)
    pypi("alpha-lib", {"Source": "https://github.com/fixture-org/alpha", "Docs": "https://alpha.example.org"})
    pypi("beta-tools", {"Homepage": "https://github.com/fixture-org/beta"})
    pypi("gamma", {}, home="https://github.com/fixture-org/gamma")
    pypi("no-meta", {"Documentation": "https://example.org/no-meta"})
    pypi("delta-pkg", {"Repository": "https://github.com/fixture-org/delta.git"})
    pypi("unknown-pkg", None, status=404)
    remote_repo("fixture-org/alpha", {"ci.yml": ALPHA_CI, "release.yaml": ALPHA_RELEASE},
                {"requirements.txt": "beta-tools\n"})
    remote_repo("fixture-org/beta", None,
                {"pyproject.toml": '[project]\nname = "beta-tools"\ndependencies = ["alpha-lib", "gamma>=1"]\n'})
    remote_repo("fixture-org/gamma", {"lint.yml": GAMMA_LINT}, {"requirements.txt": "alpha-lib\n"})
    remote_repo("fixture-org/epsilon", EPSILON, {})
    write(FIX / "repos.txt", "# recorded repositories\nfixture-org/alpha\nhttps://github.com/fixture-org/gamma\nfixture-org/epsilon\n")


def main():
    for sub in ("examples", "paper", "corpus", "permissions", "project", "forge"):
        shutil.rmtree(FIX / sub, ignore_errors=True)
    examples()
    corpus()
    permissions()
    project()


if __name__ == "__main__":
    main()
