"""Minimal external agent: answers every request with the query as a comment plus `1+1`."""
import json
import sys

request = json.loads(sys.stdin.readline())
code = "# " + request["query"].replace("\n", " ") + "\n1+1"
print(json.dumps({"code": code, "raw_message": code}))
