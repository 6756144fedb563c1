 // project package

import org.example.util.Strings;
import static org.example.util.Strings.pad;
import java.util.List;

/* Literals that look like code must survive every rule. */
public class Literals {
    static final String URL = "http://example.org/*not-a-comment*/";
    static final String LINE = "// not a comment either";
    static final String IMPORT = "import org.example.util.Strings;";
    static final char QUOTE = '"', SLASH = '/', TICK = '\'';
    static final String ESCAPED = "a \"quoted\" /* word */";
    static final String BLOCK = """
        package fake.pkg;
        // still text
        /* also text */
        """;

    String render(List<String> parts) {
        String joined = String.join("/", parts); /* trailing */ return pad(joined, 4) + Strings.EMPTY;
    }
}
