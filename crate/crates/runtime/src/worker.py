import ast
import base64
import builtins
import contextlib
import copy
import datetime
import decimal
import hashlib
import io
import json
import math
import os
import pickle
import re
import signal
import sys
import time
import traceback
import types
import warnings

_proto = os.fdopen(os.dup(1), "w", buffering=1, encoding="utf-8")
os.dup2(2, 1)
sys.stdout = io.TextIOWrapper(os.fdopen(1, "wb", buffering=0), encoding="utf-8", line_buffering=True)
warnings.filterwarnings("ignore")

try:
    import cloudpickle
except ImportError:
    try:
        from joblib.externals import cloudpickle
    except ImportError:
        cloudpickle = None

try:
    import numpy as np
except ImportError:
    np = None
try:
    import pandas as pd
except ImportError:
    pd = None

MAX_DEPTH = 6
HEAD_ROWS = 5


class CellTimeout(BaseException):
    pass


def _on_alarm(signum, frame):
    raise CellTimeout()


signal.signal(signal.SIGALRM, _on_alarm)


def fresh_namespace():
    return {"__name__": "__main__", "__builtins__": builtins}


NS = fresh_namespace()


def user_names(ns):
    return sorted(k for k in ns if not (k.startswith("__") and k.endswith("__")))


def error_kind(exc):
    if isinstance(exc, CellTimeout):
        return "timeout"
    if isinstance(exc, SyntaxError):
        return "syntax"
    if isinstance(exc, ImportError):
        return "module-not-found"
    if isinstance(exc, AttributeError):
        return "attribute"
    if isinstance(exc, KeyError):
        return "key"
    if isinstance(exc, NameError):
        return "name"
    if isinstance(exc, TypeError):
        return "type"
    if isinstance(exc, ValueError):
        return "value"
    return "other"


def describe_error(exc):
    if isinstance(exc, CellTimeout):
        message = "execution exceeded the time limit"
        tb = ""
    else:
        message = "%s: %s" % (type(exc).__name__, exc)
        tb = "".join(traceback.format_exception(type(exc), exc, exc.__traceback__))[-4000:]
    return {"kind": error_kind(exc), "message": message, "traceback": tb}


@contextlib.contextmanager
def time_limit(seconds):
    if seconds and seconds > 0:
        signal.setitimer(signal.ITIMER_REAL, seconds, 0.05)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)


# ---------------------------------------------------------------- encoding


def fingerprint_bytes(data):
    return hashlib.sha256(data).hexdigest()


def fingerprint(obj):
    if isinstance(obj, types.ModuleType):
        return fingerprint_bytes(("module:" + obj.__name__).encode())
    if isinstance(obj, (types.FunctionType, types.MethodType)):
        fn = getattr(obj, "__func__", obj)
        code = fn.__code__
        payload = repr((fn.__qualname__, code.co_code, code.co_consts, code.co_names))
        return fingerprint_bytes(payload.encode())
    if isinstance(obj, type):
        return fingerprint_bytes(("type:" + obj.__module__ + "." + obj.__qualname__).encode())
    if pd is not None and isinstance(obj, (pd.DataFrame, pd.Series)):
        try:
            h = pd.util.hash_pandas_object(obj, index=True).values.tobytes()
            extra = repr((list(getattr(obj, "columns", [])), str(getattr(obj, "dtypes", ""))))
            return fingerprint_bytes(h + extra.encode())
        except Exception:
            pass
    for dumps in (lambda o: pickle.dumps(o, protocol=4), getattr(cloudpickle, "dumps", None)):
        if dumps is None:
            continue
        try:
            data = dumps(obj)
        except Exception:
            continue
        try:
            data = dumps(pickle.loads(data))
        except Exception:
            pass
        return fingerprint_bytes(data)
    return fingerprint_bytes(repr(obj).encode(errors="replace"))


def type_name(obj):
    t = type(obj)
    module = getattr(t, "__module__", "builtins")
    return t.__qualname__ if module == "builtins" else module.split(".")[0] + "." + t.__qualname__


def opaque(obj):
    try:
        text = repr(obj)
    except Exception:
        text = "<unrepresentable>"
    text = re.sub(r" at 0x[0-9a-fA-F]+", "", text)
    return {"type": "object", "type_name": type_name(obj), "repr": text[:300], "fingerprint": fingerprint(obj)}


def enc_float(v):
    v = float(v)
    if math.isnan(v):
        return {"type": "float", "v": "nan"}
    if math.isinf(v):
        return {"type": "float", "v": "inf" if v > 0 else "-inf"}
    return {"type": "float", "v": v}


def enc_index(idx, budget, depth):
    names = list(idx.names) if len(idx.names) > 1 else [idx.name]
    name = encode(tuple(names), budget, depth + 1) if len(names) > 1 else encode(names[0], budget, depth + 1)
    return {"name": name, "dtype": str(idx.dtype), "values": [encode(v, budget, depth + 1) for v in idx]}


def encode(obj, budget, depth=0):
    if obj is None:
        return {"type": "none"}
    if isinstance(obj, bool) or (np is not None and isinstance(obj, np.bool_)):
        return {"type": "bool", "v": bool(obj)}
    if isinstance(obj, int) or (np is not None and isinstance(obj, np.integer)):
        v = int(obj)
        if -(2 ** 63) <= v < 2 ** 63:
            return {"type": "int", "v": v}
        return enc_float(v)
    if isinstance(obj, float) or (np is not None and isinstance(obj, np.floating)):
        return enc_float(obj)
    if isinstance(obj, decimal.Decimal):
        return enc_float(obj)
    if isinstance(obj, str):
        return {"type": "str", "v": obj}
    if pd is not None:
        if obj is pd.NaT:
            return {"type": "float", "v": "nan"}
        if obj is pd.NA:
            return {"type": "none"}
        if isinstance(obj, pd.Timestamp):
            return {"type": "datetime", "v": obj.isoformat()}
        if isinstance(obj, pd.Timedelta):
            return {"type": "duration", "seconds": obj.total_seconds()}
    if isinstance(obj, (datetime.datetime, datetime.date)):
        return {"type": "datetime", "v": obj.isoformat()}
    if isinstance(obj, datetime.timedelta):
        return {"type": "duration", "seconds": obj.total_seconds()}
    if np is not None:
        if isinstance(obj, np.datetime64):
            return encode(pd.Timestamp(obj) if pd is not None else str(obj), budget, depth)
        if isinstance(obj, np.timedelta64):
            return encode(pd.Timedelta(obj) if pd is not None else str(obj), budget, depth)
    if depth > MAX_DEPTH:
        return opaque(obj)
    if pd is not None:
        if isinstance(obj, pd.DataFrame):
            if obj.size > budget[0]:
                return opaque(obj)
            budget[0] -= obj.size
            return {
                "type": "frame",
                "columns": [encode(c, budget, depth + 1) for c in obj.columns],
                "dtypes": [str(t) for t in obj.dtypes],
                "index": enc_index(obj.index, budget, depth),
                "data": [[encode(v, budget, depth + 1) for v in obj.iloc[:, i].tolist()] for i in range(obj.shape[1])],
            }
        if isinstance(obj, pd.Series):
            if obj.size > budget[0]:
                return opaque(obj)
            budget[0] -= obj.size
            return {
                "type": "series",
                "name": encode(obj.name, budget, depth + 1),
                "dtype": str(obj.dtype),
                "index": enc_index(obj.index, budget, depth),
                "values": [encode(v, budget, depth + 1) for v in obj.tolist()],
            }
        if isinstance(obj, pd.Index):
            if len(obj) > budget[0]:
                return opaque(obj)
            budget[0] -= len(obj)
            return {"type": "index", "index": enc_index(obj, budget, depth)}
        if isinstance(obj, pd.Categorical):
            return encode(np.asarray(obj), budget, depth)
    if np is not None and isinstance(obj, np.ndarray):
        if obj.size > budget[0]:
            return opaque(obj)
        budget[0] -= obj.size
        return {
            "type": "array",
            "dtype": str(obj.dtype),
            "shape": list(obj.shape),
            "data": [encode(v, budget, depth + 1) for v in obj.ravel().tolist()],
        }
    if isinstance(obj, (list, tuple, set, frozenset)):
        if len(obj) > budget[0]:
            return opaque(obj)
        budget[0] -= len(obj)
        items = [encode(v, budget, depth + 1) for v in obj]
        kind = "list" if isinstance(obj, list) else "tuple" if isinstance(obj, tuple) else "set"
        return {"type": kind, "items": items}
    if isinstance(obj, dict):
        if len(obj) > budget[0]:
            return opaque(obj)
        budget[0] -= len(obj)
        return {"type": "dict", "items": [[encode(k, budget, depth + 1), encode(v, budget, depth + 1)] for k, v in obj.items()]}
    return opaque(obj)


def text_of(obj):
    try:
        return str(obj)
    except Exception:
        return repr(obj)


def encode_result(obj, max_cells):
    return {"value": encode(obj, [max_cells]), "text": text_of(obj)}


# ---------------------------------------------------------------- api tracing

API_LOG = []


def _top(module):
    return (module or "").split(".")[0]


def qualify(obj):
    try:
        if isinstance(obj, types.MethodType) or (
            isinstance(obj, types.BuiltinMethodType) and getattr(obj, "__self__", None) is not None
            and not isinstance(obj.__self__, types.ModuleType)
        ):
            owner = type(obj.__self__)
            if isinstance(obj.__self__, type):
                owner = obj.__self__
            module = _top(owner.__module__)
            if module in ("__main__", ""):
                return None
            return "%s.%s.%s" % (module, owner.__qualname__, obj.__name__)
        if np is not None and isinstance(obj, np.ufunc):
            return "numpy." + obj.__name__
        if isinstance(obj, (types.FunctionType, types.BuiltinFunctionType, type)):
            module = getattr(obj, "__module__", None)
            if module is None and isinstance(obj, types.BuiltinFunctionType):
                module = getattr(getattr(obj, "__self__", None), "__name__", None)
            module = _top(module)
            if module in ("__main__", ""):
                return None
            return "%s.%s" % (module, obj.__qualname__)
        owner = type(obj)
        module = _top(owner.__module__)
        if module in ("__main__", ""):
            return None
        name = getattr(obj, "__name__", None)
        if name:
            return "%s.%s" % (module, name)
        return "%s.%s.__call__" % (module, owner.__qualname__)
    except Exception:
        return None


def _owner_name(value):
    owner = value if isinstance(value, type) else type(value)
    module = _top(getattr(owner, "__module__", ""))
    if module in ("__main__", ""):
        return None
    if isinstance(value, types.ModuleType):
        return _top(value.__name__)
    return "%s.%s" % (module, owner.__qualname__)


def _rec_call(fn):
    API_LOG.append(qualify(fn) or "<unresolved>")
    return fn


def _rec_sub(value):
    owner = _owner_name(value)
    API_LOG.append(owner + ".__getitem__" if owner else "<unresolved>")
    return value


def _rec_attr(value, attr):
    result = getattr(value, attr)
    if isinstance(value, types.ModuleType):
        if not callable(result):
            API_LOG.append("%s.%s" % (_top(value.__name__), attr))
        return result
    owner = _owner_name(value)
    API_LOG.append("%s.%s" % (owner, attr) if owner else "<unresolved>")
    return result


class _Instrument(ast.NodeTransformer):
    def visit_Call(self, node):
        func = node.func
        if isinstance(func, ast.Attribute):
            func = ast.Attribute(value=self.visit(func.value), attr=func.attr, ctx=ast.Load())
        else:
            func = self.visit(func)
        node.args = [self.visit(a) for a in node.args]
        node.keywords = [self.visit(k) for k in node.keywords]
        node.func = ast.Call(func=ast.Name(id="__dseval_call__", ctx=ast.Load()), args=[func], keywords=[])
        return node

    def visit_Subscript(self, node):
        self.generic_visit(node)
        if isinstance(node.ctx, ast.Load):
            node.value = ast.Call(func=ast.Name(id="__dseval_sub__", ctx=ast.Load()), args=[node.value], keywords=[])
        return node

    def visit_Attribute(self, node):
        self.generic_visit(node)
        if isinstance(node.ctx, ast.Load):
            return ast.Call(
                func=ast.Name(id="__dseval_attr__", ctx=ast.Load()),
                args=[node.value, ast.Constant(node.attr)],
                keywords=[],
            )
        return node


# ---------------------------------------------------------------- execution


def split_last_expression(tree):
    if tree.body and isinstance(tree.body[-1], ast.Expr):
        last = tree.body.pop()
        return ast.Expression(last.value)
    return None


def rollback_token():
    if cloudpickle is not None:
        try:
            return ("pickle", cloudpickle.dumps({k: NS[k] for k in user_names(NS)}))
        except Exception:
            pass
    return ("shallow", dict(NS))


def rollback(token):
    kind, payload = token
    if kind == "pickle":
        restore_mapping(pickle.loads(payload))
    else:
        NS.clear()
        NS.update(payload)


def op_exec(req):
    code = req["code"]
    max_time = req.get("max_time")
    max_cells = req.get("max_cells", 200000)
    trace = req.get("trace_calls", False)
    buf = io.StringIO()
    result = None
    error = None
    value = None
    start = time.perf_counter()
    token = None
    try:
        tree = ast.parse(code, "<cell>")
        if trace:
            tree = ast.fix_missing_locations(_Instrument().visit(tree))
            NS["__dseval_call__"] = _rec_call
            NS["__dseval_sub__"] = _rec_sub
            NS["__dseval_attr__"] = _rec_attr
            del API_LOG[:]
        last = split_last_expression(tree)
        body = compile(tree, "<cell>", "exec")
        tail = compile(last, "<cell>", "eval") if last is not None else None
        if max_time:
            token = rollback_token()
        with contextlib.redirect_stdout(buf), time_limit(max_time):
            exec(body, NS)
            if tail is not None:
                value = eval(tail, NS)
    except BaseException as exc:
        if isinstance(exc, KeyboardInterrupt):
            raise
        error = describe_error(exc)
        if isinstance(exc, CellTimeout) and token is not None:
            rollback(token)
    finally:
        for name in ("__dseval_call__", "__dseval_sub__", "__dseval_attr__"):
            NS.pop(name, None)
    duration = time.perf_counter() - start
    if error is None and value is not None:
        try:
            result = encode_result(value, max_cells)
        except Exception as exc:
            result = {"value": opaque(value), "text": text_of(value)}
    out = {"ok": True, "stream_output": buf.getvalue(), "error": error, "execute_result": result, "duration": duration}
    if trace:
        out["api_calls"] = list(API_LOG)
    return out


# ---------------------------------------------------------------- snapshots


def rebind(obj):
    if isinstance(obj, types.FunctionType) and obj.__module__ == "__main__" and obj.__globals__ is not NS:
        new = types.FunctionType(obj.__code__, NS, obj.__name__, obj.__defaults__, obj.__closure__)
        new.__kwdefaults__ = obj.__kwdefaults__
        new.__qualname__ = obj.__qualname__
        new.__annotations__ = obj.__annotations__
        new.__dict__.update(obj.__dict__)
        return new
    if isinstance(obj, type) and obj.__module__ == "__main__":
        for key, attr in list(vars(obj).items()):
            if isinstance(attr, types.FunctionType):
                try:
                    setattr(obj, key, rebind(attr))
                except (AttributeError, TypeError):
                    pass
    return obj


def restore_mapping(mapping):
    NS.clear()
    NS.update(fresh_namespace())
    NS.update(mapping)
    for key in list(mapping):
        NS[key] = rebind(NS[key])


def op_snapshot(req):
    names = user_names(NS)
    if cloudpickle is None:
        return {"ok": True, "blob": None, "unpicklable": names}
    try:
        blob = cloudpickle.dumps({k: NS[k] for k in names})
        return {"ok": True, "blob": base64.b64encode(blob).decode(), "unpicklable": []}
    except Exception:
        pass
    good, bad = [], []
    for k in names:
        try:
            cloudpickle.dumps(NS[k])
            good.append(k)
        except Exception:
            bad.append(k)
    try:
        blob = cloudpickle.dumps({k: NS[k] for k in good})
        blob = base64.b64encode(blob).decode()
    except Exception:
        blob, bad = None, names
    return {"ok": True, "blob": blob, "unpicklable": bad}


def op_restore(req):
    restore_mapping(pickle.loads(base64.b64decode(req["blob"])))
    return {"ok": True}


def op_reset(req):
    NS.clear()
    NS.update(fresh_namespace())
    return {"ok": True}


def op_view(req):
    names = req.get("names")
    if names is None:
        names = user_names(NS)
    max_cells = req.get("max_cells", 200000)
    values = {}
    for name in names:
        if name in NS:
            try:
                values[name] = encode(NS[name], [max_cells])
            except Exception:
                values[name] = opaque(NS[name])
        else:
            values[name] = None
    return {"ok": True, "values": values}


def kind_of(obj):
    if pd is not None and isinstance(obj, pd.DataFrame):
        return "DataFrame"
    if pd is not None and isinstance(obj, pd.Series):
        return "Series"
    if np is not None and isinstance(obj, np.ndarray):
        return "ndarray"
    if isinstance(obj, types.ModuleType):
        return "module"
    if isinstance(obj, (types.FunctionType, types.BuiltinFunctionType)):
        return "function"
    if isinstance(obj, type):
        return "class"
    return type(obj).__name__


def op_summaries(req):
    head = req.get("head", HEAD_ROWS)
    out = []
    for name in user_names(NS):
        obj = NS[name]
        kind = kind_of(obj)
        entry = {"name": name, "kind": kind, "shape": None, "columns": [], "dtypes": [], "nunique": [], "head": None}
        try:
            if pd is not None and isinstance(obj, pd.DataFrame):
                entry["shape"] = list(obj.shape)
                entry["columns"] = [str(c) for c in obj.columns]
                entry["dtypes"] = [str(t) for t in obj.dtypes]
                entry["nunique"] = [int(obj.iloc[:, i].nunique(dropna=True)) for i in range(obj.shape[1])]
                entry["head"] = obj.head(head).to_string()
            elif pd is not None and isinstance(obj, pd.Series):
                entry["shape"] = list(obj.shape)
                entry["columns"] = [str(obj.name)] if obj.name is not None else []
                entry["dtypes"] = [str(obj.dtype)]
                entry["nunique"] = [int(obj.nunique(dropna=True))]
                entry["head"] = obj.head(head).to_string()
            elif np is not None and isinstance(obj, np.ndarray):
                entry["shape"] = list(obj.shape)
                entry["dtypes"] = [str(obj.dtype)]
                entry["head"] = repr(obj[:head])
            elif kind not in ("module", "function", "class"):
                entry["head"] = repr(obj)[:200]
        except Exception:
            pass
        out.append(entry)
    return {"ok": True, "variables": out}


def to_python(arg, scope):
    if isinstance(arg, str) and len(arg) >= 2 and arg.startswith("`") and arg.endswith("`"):
        return eval(arg[1:-1], scope)
    return arg


def op_call(req):
    max_cells = req.get("max_cells", 200000)
    fn = NS.get(req["function"])
    if fn is None or not callable(fn):
        return {"ok": True, "status": "missing"}
    scope = dict(NS)
    try:
        args = [to_python(a, scope) for a in req.get("args", [])]
    except BaseException as exc:
        return {"ok": True, "status": "bad-input", "error": describe_error(exc)}
    checker = req.get("input_validator")
    if checker:
        try:
            exec(checker, scope)
            scope["_validate"](*copy.deepcopy(args))
        except BaseException as exc:
            return {"ok": True, "status": "bad-input", "error": describe_error(exc)}
    buf = io.StringIO()
    try:
        with contextlib.redirect_stdout(buf), time_limit(req.get("max_time")):
            value = fn(*copy.deepcopy(args))
    except BaseException as exc:
        return {"ok": True, "status": "raised", "error": describe_error(exc)}
    return {"ok": True, "status": "ok", "result": encode_result(value, max_cells)}


def op_score_model(req):
    model = NS.get(req["model"])
    if model is None:
        return {"ok": True, "status": "missing", "message": "no variable named %r" % req["model"]}
    try:
        x = eval(req["x"], dict(NS))
        y = eval(req["y"], dict(NS))
        metric = req.get("metric")
        with time_limit(req.get("max_time")):
            if metric:
                from sklearn.metrics import get_scorer

                score = get_scorer(metric)(model, x, y)
            else:
                score = model.score(x, y)
        return {"ok": True, "status": "ok", "score": float(score)}
    except BaseException as exc:
        return {"ok": True, "status": "raised", "error": describe_error(exc)}


def op_names(req):
    return {"ok": True, "names": {name: kind_of(NS[name]) for name in user_names(NS)}}


OPS = {
    "ping": lambda req: {"ok": True, "pid": os.getpid()},
    "names": op_names,
    "exec": op_exec,
    "snapshot": op_snapshot,
    "restore": op_restore,
    "reset": op_reset,
    "view": op_view,
    "summaries": op_summaries,
    "call": op_call,
    "score_model": op_score_model,
}


def main():
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            reply = OPS[req["op"]](req)
        except BaseException as exc:
            if isinstance(exc, KeyboardInterrupt):
                raise
            reply = {"ok": False, "error": "%s: %s" % (type(exc).__name__, exc)}
        try:
            text = json.dumps(reply, allow_nan=False)
        except ValueError as exc:
            text = json.dumps({"ok": False, "error": "unencodable reply: %s" % exc})
        _proto.write(text + "\n")
        _proto.flush()


main()
