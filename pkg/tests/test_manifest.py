import datetime
import json

from posefilter import __version__
from posefilter.manifest import file_digest, tree_digest, write_manifest


class TestDigests:
    def test_known_file_digest(self, tmp_path):
        p = tmp_path / "f.txt"
        p.write_bytes(b"hello\n")
        assert file_digest(p) == (
            "sha256:5891b5b522d5df086d0ff0b110fbd9d21bb4fc7163af34d08286a2e846f6be03"
        )

    def test_digest_changes_with_content(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        a.write_bytes(b"x")
        b.write_bytes(b"y")
        assert file_digest(a) != file_digest(b)

    def test_tree_digest_ignores_creation_order(self, tmp_path):
        d1, d2 = tmp_path / "d1", tmp_path / "d2"
        for d, order in ((d1, ("a.txt", "b.txt")), (d2, ("b.txt", "a.txt"))):
            (d / "sub").mkdir(parents=True)
            for name in order:
                (d / name).write_text(name)
            (d / "sub" / "c.txt").write_text("c")
        assert tree_digest(d1) == tree_digest(d2)

    def test_tree_digest_sees_content(self, tmp_path):
        d1, d2 = tmp_path / "d1", tmp_path / "d2"
        d1.mkdir()
        d2.mkdir()
        (d1 / "a.txt").write_text("1")
        (d2 / "a.txt").write_text("2")
        assert tree_digest(d1) != tree_digest(d2)


class TestWriteManifest:
    def test_fields(self, tmp_path):
        src = tmp_path / "in.json"
        src.write_text("[]")
        out = tmp_path / "out.json"
        out.write_text("[]")
        path = tmp_path / "manifest.json"
        write_manifest(path, command="filter --x 1", config={"upper": 0.7},
                       inputs=[src], outputs=[out], seeds={"split": 3})
        doc = json.loads(path.read_text())
        assert doc["tool"] == "posefilter"
        assert doc["version"] == __version__
        assert doc["command"] == "filter --x 1"
        assert doc["config"] == {"upper": 0.7}
        assert doc["inputs"][str(src)] == file_digest(src)
        assert str(out) in doc["outputs"]
        assert doc["seeds"] == {"split": 3}
        # timestamp parses back as an aware UTC instant
        stamp = datetime.datetime.fromisoformat(doc["created_utc"])
        assert stamp.tzinfo is not None

    def test_directory_input_uses_tree_digest(self, tmp_path):
        d = tmp_path / "images"
        d.mkdir()
        (d / "a.png").write_bytes(b"fake")
        path = tmp_path / "manifest.json"
        write_manifest(path, command="blur", config={}, inputs=[d], outputs=[])
        doc = json.loads(path.read_text())
        assert doc["inputs"][str(d)] == tree_digest(d)
