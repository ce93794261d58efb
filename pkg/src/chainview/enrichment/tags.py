"""Address tag files: one ``address<TAB>tag`` record per line."""
from __future__ import annotations

import logging
from typing import Dict, Optional

from ..errors import MalformedLineError

log = logging.getLogger(__name__)


class TagMap:
    def __init__(self, tags: Optional[Dict[str, str]] = None):
        self.tags: Dict[str, str] = dict(tags or {})
        self.warnings = []

    def __len__(self):
        return len(self.tags)

    def __contains__(self, address):
        return address in self.tags

    def get(self, address: str) -> Optional[str]:
        return self.tags.get(address)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for address, tag in self.tags.items():
                fh.write(f"{address}\t{tag}\n")


def load_tags(path) -> TagMap:
    tag_map = TagMap()
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            address, sep, tag = line.partition("\t")
            address, tag = address.strip(), tag.strip()
            if not sep or not address or not tag:
                raise MalformedLineError(number, line)
            if address in tag_map.tags:
                msg = f"line {number}: duplicate address {address}, keeping first tag"
                log.warning(msg)
                tag_map.warnings.append(msg)
                continue
            tag_map.tags[address] = tag
    return tag_map
