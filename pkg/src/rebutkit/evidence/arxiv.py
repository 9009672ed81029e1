"""Scholarly search against the arXiv export API (Atom 1.0).

Network access is injectable: every public function takes an `http_get`
callable `(url) -> (status, text)` so tests and replay runs never touch the
network. The default uses requests with a fixed timeout and one retry.
"""

from __future__ import annotations

import logging
import re
import xml.etree.ElementTree as ET
from typing import Callable
from urllib.parse import quote_plus

import requests

from ..errors import FeedParseError, NetworkError

log = logging.getLogger(__name__)

BASE_URL = "http://export.arxiv.org/api/query"
ATOM_NS = {"atom": "http://www.w3.org/2005/Atom"}
FETCH_TIMEOUT_S = 20.0
FETCH_RETRIES = 1
MAX_RESPONSE_BYTES = 20 * 1024 * 1024

HttpGet = Callable[[str], tuple[int, str]]

_ARXIV_ABS_RE = re.compile(r"arxiv\.org/(?:abs|pdf)/([0-9]{4}\.[0-9]{4,5}(?:v\d+)?|[a-z-]+/\d{7})")
_HTML_TITLE_RE = re.compile(r"<title[^>]*>(.*?)</title>", re.IGNORECASE | re.DOTALL)


def build_query_url(phrase: str, start: int = 0, max_results: int = 10) -> str:
    """Exact request shape: `?search_query=all:%22<phrase>%22&start=0&max_results=N`."""
    return f"{BASE_URL}?search_query=all:%22{quote_plus(phrase)}%22&start={start}&max_results={max_results}"


def build_id_url(arxiv_id: str) -> str:
    return f"{BASE_URL}?id_list={quote_plus(arxiv_id)}&start=0&max_results=1"


def default_http_get(url: str) -> tuple[int, str]:
    if not url.startswith(("http://", "https://")):
        raise NetworkError(url, "only http(s) URLs are fetched")
    resp = requests.get(url, timeout=FETCH_TIMEOUT_S, stream=True)
    content = resp.raw.read(MAX_RESPONSE_BYTES + 1, decode_content=True)
    if len(content) > MAX_RESPONSE_BYTES:
        raise NetworkError(url, "response exceeds size cap")
    return resp.status_code, content.decode(resp.encoding or "utf-8", errors="replace")


def _get_with_retry(url: str, http_get: HttpGet) -> str:
    last_cause = ""
    for attempt in range(FETCH_RETRIES + 1):
        try:
            status, text = http_get(url)
        except NetworkError:
            raise
        except Exception as exc:
            last_cause = str(exc)
            log.warning("fetch failed (%d/%d) for %s: %s", attempt + 1, FETCH_RETRIES + 1, url, exc)
            continue
        if status == 200:
            return text
        last_cause = f"HTTP {status}"
        log.warning("fetch status %d (%d/%d) for %s", status, attempt + 1, FETCH_RETRIES + 1, url)
    raise NetworkError(url, last_cause or "unreachable")


def parse_atom_feed(xml_text: str) -> list[dict]:
    """Entries as {title, abstract, url}; whitespace in fields collapsed."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise FeedParseError(f"not an Atom feed: {exc}") from exc
    if not root.tag.endswith("feed"):
        raise FeedParseError(f"unexpected root element {root.tag!r}")
    entries = []
    for entry in root.findall("atom:entry", ATOM_NS):
        title = re.sub(r"\s+", " ", entry.findtext("atom:title", default="", namespaces=ATOM_NS)).strip()
        abstract = re.sub(r"\s+", " ", entry.findtext("atom:summary", default="", namespaces=ATOM_NS)).strip()
        url = entry.findtext("atom:id", default="", namespaces=ATOM_NS).strip()
        link = entry.find("atom:link[@rel='alternate']", ATOM_NS)
        if link is not None and link.get("href"):
            url = link.get("href")
        entries.append({"title": title, "abstract": abstract, "url": url})
    return entries


def search_arxiv(phrase: str, max_results: int = 10, http_get: HttpGet | None = None) -> list[dict]:
    http_get = http_get or default_http_get
    url = build_query_url(phrase, max_results=max_results)
    return parse_atom_feed(_get_with_retry(url, http_get))


def fetch_link_metadata(url: str, http_get: HttpGet | None = None) -> dict:
    """Best-effort title/abstract for a reviewer-provided link.

    arXiv abs/pdf links go through the export API; anything else falls back
    to the HTML <title>. Failures degrade to a URL-only record.
    """
    http_get = http_get or default_http_get
    m = _ARXIV_ABS_RE.search(url)
    if m:
        try:
            entries = parse_atom_feed(_get_with_retry(build_id_url(m.group(1)), http_get))
        except (NetworkError, FeedParseError) as exc:
            log.warning("link metadata fetch failed for %s: %s", url, exc)
            return {"title": "", "abstract": "", "url": url}
        if entries:
            return {"title": entries[0]["title"], "abstract": entries[0]["abstract"], "url": url}
        return {"title": "", "abstract": "", "url": url}
    try:
        body = _get_with_retry(url, http_get)
    except NetworkError as exc:
        log.warning("link fetch failed for %s: %s", url, exc)
        return {"title": "", "abstract": "", "url": url}
    title_match = _HTML_TITLE_RE.search(body)
    title = re.sub(r"\s+", " ", title_match.group(1)).strip() if title_match else ""
    return {"title": title, "abstract": "", "url": url}
