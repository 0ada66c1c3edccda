# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.

NAME = "TMNet"
VERSION = "0.3.0"
DESCRIPTION = "Task-driven modular networks for compositional zero-shot learning"
AUTHOR = "TMNet developers"
LICENSE = "GNU AGPLv3"
