# coding:utf-8
# external gallery instances: python files defining build(config), optional name / description / expect

import os
import sys
import time
import importlib.util

from .exception import GalleryError
from .gallery import GalleryEntry, register
from .logger import logger

exts = ('.py', )


def load_module(name, path):
    spec = importlib.util.spec_from_file_location(name, path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    sys.modules[name] = mod
    return mod


class Module(object):
    def __init__(self, name, path=None, module=None):
        self.load_time = time.time()

        if path:
            mod = load_module("lowerbound_lab_instance_%s" % name.replace('-', '_'), path)
            self.mtime = os.stat(path).st_mtime
        elif module:
            mod = module
            self.mtime = self.load_time
        else:
            raise GalleryError("either path or module needs to be passed in")

        if not callable(getattr(mod, "build", None)):
            raise GalleryError("instance module %s defines no build(config)" % name)
        self.mod = mod
        self.path = path
        self.name = getattr(mod, "name", name)
        self.description = getattr(mod, "description", "")
        self.expect = getattr(mod, "expect", [])

    def build(self, config=None):
        return self.mod.build(config)

    def entry(self):
        return GalleryEntry(self.name, self.build, self.description, expect=self.expect,
                            source=self.path or "module", takes_config=True)


def load_instances(directory):
    """Register every instance module in ``directory``; broken files are logged and skipped."""
    if not os.path.isdir(directory):
        raise GalleryError("%s is not a directory" % directory)
    loaded = []
    for p in sorted(os.listdir(directory)):
        n, ext = os.path.splitext(p)
        if ext not in exts or n.startswith('_'):
            continue
        path = os.path.join(directory, p)
        try:
            mod = Module(n, path=path)
        except Exception as ex:
            logger.warning("error loading instance \"%s\": %s", n, ex)
        else:
            logger.debug("loaded instance \"%s\" from %s", mod.name, path)
            register(mod.entry())
            loaded.append(mod.name)
    return loaded
